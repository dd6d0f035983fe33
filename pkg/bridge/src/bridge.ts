/**
 * Orchestration: video in, detections JSONL out.
 */

import * as fs from 'fs';
import { readAvi } from './avi';
import { ColorPrototypeScorer, CropScorer } from './classify';
import { FrameDetector, LuminanceBlobDetector } from './detect';
import { DetectionRecord, serializeRecords, validateDetectionsJsonl, ValidationReport } from './jsonl';

export interface BridgeConfig {
    videoPath: string;
    outPath: string;
    classFilter?: string; // default 'boat'
    confidenceFloor?: number; // default 0.25
    fpsOverride?: number;
    classifierModelPath?: string;
    detector?: FrameDetector;
    minArea?: number;
    thresholdSigmas?: number;
}

export interface BridgeResult {
    frames: number;
    records: number;
}

export function detectVideo(cfg: BridgeConfig): BridgeResult {
    const classFilter = cfg.classFilter ?? 'boat';
    const confidenceFloor = cfg.confidenceFloor ?? 0.25;
    if (confidenceFloor < 0 || confidenceFloor > 1) {
        throw new Error(`confidence floor must lie in [0, 1], got ${confidenceFloor}`);
    }
    const detector =
        cfg.detector ??
        new LuminanceBlobDetector({ minArea: cfg.minArea, thresholdSigmas: cfg.thresholdSigmas });
    const scorer: CropScorer | null = cfg.classifierModelPath
        ? ColorPrototypeScorer.fromFile(cfg.classifierModelPath)
        : null;

    const video = readAvi(cfg.videoPath, cfg.fpsOverride);
    const records: DetectionRecord[] = [];
    for (const frame of video.frames) {
        for (const det of detector.detect(frame)) {
            if (det.label !== classFilter) continue;
            if (det.score < confidenceFloor) continue;
            const record: DetectionRecord = {
                frame: frame.index,
                t: frame.tSeconds,
                bbox: [det.x, det.y, det.w, det.h],
                score: det.score,
            };
            if (scorer !== null) {
                record.p_c = Math.min(1, Math.max(0, scorer.score(frame, det)));
            }
            records.push(record);
        }
    }

    const text = serializeRecords(records);
    const report = validateDetectionsJsonl(text);
    if (!report.ok) {
        // should be unreachable; the emitter and validator share the schema
        const first = report.errors[0];
        throw new Error(`internal: emitted records fail validation at line ${first.line}: ${first.message}`);
    }
    const tmp = `${cfg.outPath}.tmp-${process.pid}`;
    fs.writeFileSync(tmp, text);
    fs.renameSync(tmp, cfg.outPath);
    return { frames: video.frames.length, records: records.length };
}

export function validateFile(path: string): ValidationReport {
    return validateDetectionsJsonl(fs.readFileSync(path, 'utf-8'));
}
