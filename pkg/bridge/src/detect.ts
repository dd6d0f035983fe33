/**
 * Frame detectors behind one small interface.
 *
 * The pinned default is a classical luminance-blob detector: boats read as
 * bright connected components against the darker sea. It needs no model
 * weights, so the bridge runs fully offline; anything smarter (an ONNX or
 * tfjs model) just has to implement FrameDetector.
 */

import { Frame } from './avi';

export interface RawDetection {
    x: number;
    y: number;
    w: number;
    h: number;
    score: number;
    label: string;
}

export interface FrameDetector {
    detect(frame: Frame): RawDetection[];
}

export interface BlobDetectorOptions {
    /** threshold = mean + thresholdSigmas * std of frame luminance */
    thresholdSigmas?: number;
    /** discard components smaller than this many pixels */
    minArea?: number;
}

export class LuminanceBlobDetector implements FrameDetector {
    private readonly k: number;
    private readonly minArea: number;

    constructor(opts: BlobDetectorOptions = {}) {
        this.k = opts.thresholdSigmas ?? 3.0;
        this.minArea = opts.minArea ?? 12;
    }

    detect(frame: Frame): RawDetection[] {
        const { width, height, rgb } = frame;
        const n = width * height;
        const gray = new Float32Array(n);
        let sum = 0;
        for (let i = 0; i < n; i++) {
            const g = 0.299 * rgb[i * 3] + 0.587 * rgb[i * 3 + 1] + 0.114 * rgb[i * 3 + 2];
            gray[i] = g;
            sum += g;
        }
        const mean = sum / n;
        let varSum = 0;
        for (let i = 0; i < n; i++) {
            const d = gray[i] - mean;
            varSum += d * d;
        }
        const std = Math.sqrt(varSum / n);
        const threshold = mean + this.k * std;

        // connected components over the binary mask, 8-neighborhood
        const labels = new Int32Array(n); // 0 = unvisited/background
        const stack: number[] = [];
        const detections: RawDetection[] = [];
        let nextLabel = 0;
        for (let start = 0; start < n; start++) {
            if (labels[start] !== 0 || gray[start] < threshold) continue;
            nextLabel += 1;
            labels[start] = nextLabel;
            stack.push(start);
            let minX = width, maxX = 0, minY = height, maxY = 0;
            let area = 0;
            let graySum = 0;
            while (stack.length > 0) {
                const p = stack.pop()!;
                const px = p % width;
                const py = (p / width) | 0;
                area += 1;
                graySum += gray[p];
                if (px < minX) minX = px;
                if (px > maxX) maxX = px;
                if (py < minY) minY = py;
                if (py > maxY) maxY = py;
                for (let dy = -1; dy <= 1; dy++) {
                    for (let dx = -1; dx <= 1; dx++) {
                        const qx = px + dx;
                        const qy = py + dy;
                        if (qx < 0 || qx >= width || qy < 0 || qy >= height) continue;
                        const q = qy * width + qx;
                        if (labels[q] === 0 && gray[q] >= threshold) {
                            labels[q] = nextLabel;
                            stack.push(q);
                        }
                    }
                }
            }
            if (area < this.minArea) continue;
            const contrast = (graySum / area - mean) / Math.max(255 - mean, 1);
            detections.push({
                x: minX,
                y: minY,
                w: maxX - minX + 1,
                h: maxY - minY + 1,
                score: Math.min(1, Math.max(0, contrast)),
                label: 'boat',
            });
        }
        // deterministic output order: left-to-right, then top-to-bottom
        detections.sort((a, b) => a.x - b.x || a.y - b.y);
        return detections;
    }
}
