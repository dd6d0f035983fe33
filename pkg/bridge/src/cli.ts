#!/usr/bin/env node
/**
 * bridge --video PATH --out PATH [--classifier MODEL.json] [--conf 0.25] [--fps N]
 *        [--min-area N] [--thresh-k K]
 * bridge validate FILE
 */

import { detectVideo, validateFile } from './bridge';

function usage(): string {
    return [
        'usage: bridge --video PATH --out PATH [--classifier MODEL.json] [--conf 0.25] [--fps N]',
        '              [--min-area N] [--thresh-k K]',
        '       bridge validate FILE',
    ].join('\n');
}

export function main(argv: string[]): number {
    if (argv[0] === 'validate') {
        if (argv.length !== 2) {
            console.error(usage());
            return 2;
        }
        try {
            const report = validateFile(argv[1]);
            if (report.ok) {
                console.log(`ok: ${report.records} records`);
                return 0;
            }
            for (const err of report.errors) {
                console.error(`${argv[1]}:${err.line}: ${err.message}`);
            }
            return 1;
        } catch (e) {
            console.error(`error: ${(e as Error).message}`);
            return 1;
        }
    }

    const opts: Record<string, string> = {};
    for (let i = 0; i < argv.length; i += 2) {
        const key = argv[i];
        const value = argv[i + 1];
        if (!key.startsWith('--') || value === undefined) {
            console.error(usage());
            return 2;
        }
        opts[key.slice(2)] = value;
    }
    if (!opts.video || !opts.out) {
        console.error(usage());
        return 2;
    }
    const num = (name: string): number | undefined => {
        if (!(name in opts)) return undefined;
        const v = Number(opts[name]);
        if (!Number.isFinite(v)) {
            throw new Error(`--${name} must be a number, got ${opts[name]}`);
        }
        return v;
    };

    try {
        const result = detectVideo({
            videoPath: opts.video,
            outPath: opts.out,
            classifierModelPath: opts.classifier,
            confidenceFloor: num('conf'),
            fpsOverride: num('fps'),
            minArea: num('min-area'),
            thresholdSigmas: num('thresh-k'),
            classFilter: opts.class,
        });
        console.log(`${opts.out}: ${result.records} detections over ${result.frames} frames`);
        return 0;
    } catch (e) {
        console.error(`error: ${(e as Error).message}`);
        return 1;
    }
}

if (require.main === module) {
    process.exit(main(process.argv.slice(2)));
}
