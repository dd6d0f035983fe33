/**
 * Optional appearance scorer producing the per-detection p_c field.
 *
 * The bundled implementation is a color-prototype model: a JSON file holding
 * the target's mean RGB and a tolerance, scoring crops by how close their
 * mean color sits to the prototype. It stands in for a learned per-crop
 * classifier; swap in anything that implements CropScorer.
 */

import * as fs from 'fs';
import { Frame } from './avi';
import { RawDetection } from './detect';

export interface CropScorer {
    score(frame: Frame, det: RawDetection): number;
}

export interface ColorPrototypeModel {
    mean_rgb: [number, number, number];
    tolerance: number;
}

export class ColorPrototypeScorer implements CropScorer {
    private readonly proto: [number, number, number];
    private readonly tol: number;

    constructor(model: ColorPrototypeModel) {
        if (
            !Array.isArray(model.mean_rgb) ||
            model.mean_rgb.length !== 3 ||
            typeof model.tolerance !== 'number' ||
            model.tolerance <= 0
        ) {
            throw new Error('classifier model must have mean_rgb: [r, g, b] and tolerance > 0');
        }
        this.proto = model.mean_rgb;
        this.tol = model.tolerance;
    }

    static fromFile(path: string): ColorPrototypeScorer {
        return new ColorPrototypeScorer(JSON.parse(fs.readFileSync(path, 'utf-8')));
    }

    score(frame: Frame, det: RawDetection): number {
        const { width, rgb } = frame;
        let r = 0, g = 0, b = 0, n = 0;
        const x1 = Math.max(0, Math.floor(det.x));
        const y1 = Math.max(0, Math.floor(det.y));
        const x2 = Math.min(frame.width - 1, Math.ceil(det.x + det.w - 1));
        const y2 = Math.min(frame.height - 1, Math.ceil(det.y + det.h - 1));
        for (let y = y1; y <= y2; y++) {
            for (let x = x1; x <= x2; x++) {
                const p = (y * width + x) * 3;
                r += rgb[p];
                g += rgb[p + 1];
                b += rgb[p + 2];
                n += 1;
            }
        }
        if (n === 0) return 0;
        const dr = r / n - this.proto[0];
        const dg = g / n - this.proto[1];
        const db = b / n - this.proto[2];
        const dist = Math.sqrt(dr * dr + dg * dg + db * db);
        return Math.exp(-((dist / this.tol) ** 2));
    }
}
