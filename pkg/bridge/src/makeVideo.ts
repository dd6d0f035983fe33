#!/usr/bin/env node
/**
 * Deterministic sample video: bright boats gliding over a dark sea, written
 * as uncompressed AVI. Gives the bridge something to chew on without any
 * camera hardware or codec dependencies.
 *
 * make-sample-video --out PATH [--seconds 4] [--fps 10] [--width 320]
 *                   [--height 240] [--boats 2] [--black]
 */

import { writeAvi } from './avi';

export interface SampleVideoOptions {
    seconds?: number;
    fps?: number;
    width?: number;
    height?: number;
    boats?: number;
    black?: boolean;
}

/** warm hull color for the first boat; the classifier prototype matches it */
export const TARGET_COLOR: [number, number, number] = [220, 120, 60];
const OTHER_COLOR: [number, number, number] = [200, 200, 205];

export function renderSampleFrames(opts: SampleVideoOptions = {}): {
    width: number;
    height: number;
    fps: number;
    frames: Uint8Array[];
} {
    const seconds = opts.seconds ?? 4;
    const fps = opts.fps ?? 10;
    const width = opts.width ?? 320;
    const height = opts.height ?? 240;
    const nBoats = opts.boats ?? 2;
    const nFrames = Math.round(seconds * fps);

    const frames: Uint8Array[] = [];
    for (let i = 0; i < nFrames; i++) {
        const rgb = new Uint8Array(width * height * 3);
        // dark sea with a gentle vertical gradient
        for (let y = 0; y < height; y++) {
            const shade = 1 + (y / height) * 0.4;
            const r = Math.round(18 * shade);
            const g = Math.round(34 * shade);
            const b = Math.round(58 * shade);
            for (let x = 0; x < width; x++) {
                const p = (y * width + x) * 3;
                rgb[p] = r;
                rgb[p + 1] = g;
                rgb[p + 2] = b;
            }
        }
        if (!opts.black) {
            const t = i / fps;
            for (let b = 0; b < nBoats; b++) {
                const color = b === 0 ? TARGET_COLOR : OTHER_COLOR;
                const bw = 18 - 3 * b;
                const bh = 8 - b;
                const dir = b % 2 === 0 ? 1 : -1;
                const cx = width / 2 + dir * (width * 0.3) * Math.sin(0) + dir * (10 + 14 * t) - dir * width * 0.25;
                const cy = height * (0.45 + 0.18 * b) + 2 * Math.sin(t * 2 + b);
                const x0 = Math.round(cx - bw / 2);
                const y0 = Math.round(cy - bh);
                for (let y = Math.max(0, y0); y < Math.min(height, y0 + bh); y++) {
                    for (let x = Math.max(0, x0); x < Math.min(width, x0 + bw); x++) {
                        const p = (y * width + x) * 3;
                        rgb[p] = color[0];
                        rgb[p + 1] = color[1];
                        rgb[p + 2] = color[2];
                    }
                }
            }
        }
        frames.push(rgb);
    }
    return { width, height, fps, frames };
}

export function makeSampleVideo(outPath: string, opts: SampleVideoOptions = {}): void {
    const { width, height, fps, frames } = renderSampleFrames(opts);
    writeAvi(outPath, width, height, fps, frames);
}

function main(argv: string[]): number {
    const opts: Record<string, string> = {};
    const flags = new Set<string>();
    for (let i = 0; i < argv.length; i++) {
        const key = argv[i];
        if (key === '--black') {
            flags.add('black');
            continue;
        }
        if (!key.startsWith('--') || argv[i + 1] === undefined) {
            console.error('usage: make-sample-video --out PATH [--seconds N] [--fps N] [--width N] [--height N] [--boats N] [--black]');
            return 2;
        }
        opts[key.slice(2)] = argv[++i];
    }
    if (!opts.out) {
        console.error('error: --out is required');
        return 2;
    }
    makeSampleVideo(opts.out, {
        seconds: opts.seconds ? Number(opts.seconds) : undefined,
        fps: opts.fps ? Number(opts.fps) : undefined,
        width: opts.width ? Number(opts.width) : undefined,
        height: opts.height ? Number(opts.height) : undefined,
        boats: opts.boats ? Number(opts.boats) : undefined,
        black: flags.has('black'),
    });
    console.log(`wrote ${opts.out}`);
    return 0;
}

if (require.main === module) {
    process.exit(main(process.argv.slice(2)));
}
