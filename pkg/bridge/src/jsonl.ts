/**
 * Detections JSONL: record shape and strict validator.
 *
 * Schema (one JSON object per line):
 *   {"frame": int, "t": seconds, "bbox": [x, y, w, h], "score": 0..1, "p_c": 0..1?}
 * Records must be sorted by frame (non-decreasing), timestamps non-decreasing,
 * one timestamp per frame, bbox sizes positive. The same rules the consuming
 * pipeline's parser enforces; shared fixtures live in ../conformance.
 */

export interface DetectionRecord {
    frame: number;
    t: number;
    bbox: [number, number, number, number];
    score: number;
    p_c?: number;
}

export interface ValidationIssue {
    line: number;
    message: string;
}

export interface ValidationReport {
    ok: boolean;
    records: number;
    errors: ValidationIssue[];
}

const ALLOWED_KEYS = new Set(['frame', 't', 'bbox', 'score', 'p_c']);

function isFiniteNumber(v: unknown): v is number {
    return typeof v === 'number' && Number.isFinite(v);
}

export function validateDetectionsJsonl(text: string): ValidationReport {
    const errors: ValidationIssue[] = [];
    let records = 0;
    let prevFrame: number | null = null;
    let prevT: number | null = null;

    const lines = text.split('\n');
    for (let i = 0; i < lines.length; i++) {
        const lineNo = i + 1;
        const line = lines[i].trim();
        if (line === '') continue;

        let obj: unknown;
        try {
            obj = JSON.parse(line);
        } catch (e) {
            errors.push({ line: lineNo, message: `invalid JSON: ${(e as Error).message}` });
            continue;
        }
        if (typeof obj !== 'object' || obj === null || Array.isArray(obj)) {
            errors.push({ line: lineNo, message: 'record must be a JSON object' });
            continue;
        }
        const rec = obj as Record<string, unknown>;

        const unknown = Object.keys(rec).filter((k) => !ALLOWED_KEYS.has(k));
        if (unknown.length > 0) {
            errors.push({ line: lineNo, message: `unknown keys [${unknown.sort().join(', ')}]` });
            continue;
        }
        for (const key of ['frame', 't', 'bbox', 'score']) {
            if (!(key in rec)) {
                errors.push({ line: lineNo, message: `missing key '${key}'` });
            }
        }
        if (errors.length > 0 && errors[errors.length - 1].line === lineNo) continue;

        if (!Number.isInteger(rec.frame) || (rec.frame as number) < 0) {
            errors.push({ line: lineNo, message: `'frame' must be a non-negative integer, got ${JSON.stringify(rec.frame)}` });
            continue;
        }
        if (!isFiniteNumber(rec.t)) {
            errors.push({ line: lineNo, message: `'t' must be a finite number` });
            continue;
        }
        const bbox = rec.bbox;
        if (!Array.isArray(bbox) || bbox.length !== 4 || !bbox.every(isFiniteNumber)) {
            errors.push({ line: lineNo, message: `'bbox' must be a list of 4 finite numbers` });
            continue;
        }
        if (!(bbox[2] > 0) || !(bbox[3] > 0)) {
            errors.push({ line: lineNo, message: `bbox width and height must be positive, got w=${bbox[2]}, h=${bbox[3]}` });
            continue;
        }
        if (!isFiniteNumber(rec.score) || rec.score < 0 || rec.score > 1) {
            errors.push({ line: lineNo, message: `'score' must lie in [0, 1]` });
            continue;
        }
        if ('p_c' in rec && (!isFiniteNumber(rec.p_c) || (rec.p_c as number) < 0 || (rec.p_c as number) > 1)) {
            errors.push({ line: lineNo, message: `'p_c' must lie in [0, 1]` });
            continue;
        }

        const frame = rec.frame as number;
        const t = rec.t as number;
        if (prevFrame !== null && prevT !== null) {
            if (frame < prevFrame) {
                errors.push({ line: lineNo, message: `frames must be non-decreasing (${frame} after ${prevFrame})` });
            } else if (t < prevT) {
                errors.push({ line: lineNo, message: `timestamps must be non-decreasing (${t} after ${prevT})` });
            } else if (frame === prevFrame && t !== prevT) {
                errors.push({ line: lineNo, message: `frame ${frame} carries two timestamps (${prevT} and ${t})` });
            }
        }
        prevFrame = frame;
        prevT = t;
        records += 1;
    }
    return { ok: errors.length === 0, records, errors };
}

export function serializeRecords(records: DetectionRecord[]): string {
    return records
        .map((r) => {
            const obj: Record<string, unknown> = {
                frame: r.frame,
                t: r.t,
                bbox: r.bbox,
                score: r.score,
            };
            if (r.p_c !== undefined) obj.p_c = r.p_c;
            return JSON.stringify(obj);
        })
        .map((l) => l + '\n')
        .join('');
}
