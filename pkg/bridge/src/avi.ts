/**
 * Minimal uncompressed AVI (RIFF / BI_RGB 24-bit) reader and writer.
 *
 * Only the DIB flavor is supported: one 'vids' stream, bottom-up BGR frames,
 * rows padded to 4 bytes. That is what `ffmpeg -c:v rawvideo -pix_fmt bgr24`
 * produces, and what the sample-video generator writes, so the bridge stays
 * free of native decoding dependencies.
 */

import * as fs from 'fs';

export interface Frame {
    index: number;
    tSeconds: number;
    width: number;
    height: number;
    /** interleaved RGB, row-major, top-down */
    rgb: Uint8Array;
}

export interface Video {
    width: number;
    height: number;
    fps: number;
    frames: Frame[];
}

function fourcc(s: string): number {
    return s.charCodeAt(0) | (s.charCodeAt(1) << 8) | (s.charCodeAt(2) << 16) | (s.charCodeAt(3) << 24);
}

function cc(buf: Buffer, off: number): string {
    return buf.toString('latin1', off, off + 4);
}

const ROW_PAD = (w: number) => (w * 3 + 3) & ~3;

export function writeAvi(path: string, width: number, height: number, fps: number, framesRgb: Uint8Array[]): void {
    const rowBytes = ROW_PAD(width);
    const frameBytes = rowBytes * height;
    const n = framesRgb.length;

    const frameChunks: Buffer[] = [];
    for (const rgb of framesRgb) {
        if (rgb.length !== width * height * 3) {
            throw new Error(`frame has ${rgb.length} bytes, expected ${width * height * 3}`);
        }
        const dib = Buffer.alloc(frameBytes);
        // top-down RGB -> bottom-up BGR with row padding
        for (let y = 0; y < height; y++) {
            const srcRow = (height - 1 - y) * width * 3;
            const dstRow = y * rowBytes;
            for (let x = 0; x < width; x++) {
                dib[dstRow + x * 3] = rgb[srcRow + x * 3 + 2];
                dib[dstRow + x * 3 + 1] = rgb[srcRow + x * 3 + 1];
                dib[dstRow + x * 3 + 2] = rgb[srcRow + x * 3];
            }
        }
        frameChunks.push(dib);
    }

    const chunk = (id: string, body: Buffer): Buffer => {
        const head = Buffer.alloc(8);
        head.writeUInt32LE(fourcc(id), 0);
        head.writeUInt32LE(body.length, 4);
        const padded = body.length % 2 ? Buffer.concat([body, Buffer.alloc(1)]) : body;
        return Buffer.concat([head, padded]);
    };
    const list = (kind: string, body: Buffer): Buffer =>
        chunk('LIST', Buffer.concat([Buffer.from(kind, 'latin1'), body]));

    const avih = Buffer.alloc(56);
    avih.writeUInt32LE(Math.round(1_000_000 / fps), 0); // dwMicroSecPerFrame
    avih.writeUInt32LE(frameBytes * Math.ceil(fps), 4); // dwMaxBytesPerSec
    avih.writeUInt32LE(0, 8);
    avih.writeUInt32LE(0x10, 12); // AVIF_HASINDEX
    avih.writeUInt32LE(n, 16); // dwTotalFrames
    avih.writeUInt32LE(0, 20);
    avih.writeUInt32LE(1, 24); // dwStreams
    avih.writeUInt32LE(frameBytes, 28);
    avih.writeUInt32LE(width, 32);
    avih.writeUInt32LE(height, 36);

    const strh = Buffer.alloc(56);
    strh.writeUInt32LE(fourcc('vids'), 0);
    strh.writeUInt32LE(fourcc('DIB '), 4);
    strh.writeUInt32LE(1, 20); // dwScale
    strh.writeUInt32LE(Math.round(fps), 24); // dwRate
    strh.writeUInt32LE(n, 32); // dwLength
    strh.writeUInt32LE(frameBytes, 36);
    strh.writeInt16LE(width, 48 + 4);
    strh.writeInt16LE(height, 48 + 6);

    const strf = Buffer.alloc(40);
    strf.writeUInt32LE(40, 0); // biSize
    strf.writeInt32LE(width, 4);
    strf.writeInt32LE(height, 8); // positive: bottom-up
    strf.writeUInt16LE(1, 12); // biPlanes
    strf.writeUInt16LE(24, 14); // biBitCount
    strf.writeUInt32LE(0, 16); // BI_RGB
    strf.writeUInt32LE(frameBytes, 20);

    const hdrl = list('hdrl', Buffer.concat([chunk('avih', avih), list('strl', Buffer.concat([chunk('strh', strh), chunk('strf', strf)]))]));

    const moviChunks: Buffer[] = [];
    const idxEntries: Buffer[] = [];
    let offsetInMovi = 4; // after the 'movi' kind tag
    for (const dib of frameChunks) {
        const c = chunk('00db', dib);
        const idx = Buffer.alloc(16);
        idx.writeUInt32LE(fourcc('00db'), 0);
        idx.writeUInt32LE(0x10, 4); // AVIIF_KEYFRAME
        idx.writeUInt32LE(offsetInMovi, 8);
        idx.writeUInt32LE(dib.length, 12);
        idxEntries.push(idx);
        offsetInMovi += c.length;
        moviChunks.push(c);
    }
    const movi = list('movi', Buffer.concat(moviChunks));
    const idx1 = chunk('idx1', Buffer.concat(idxEntries));

    const riffBody = Buffer.concat([Buffer.from('AVI ', 'latin1'), hdrl, movi, idx1]);
    const out = Buffer.alloc(8 + riffBody.length);
    out.writeUInt32LE(fourcc('RIFF'), 0);
    out.writeUInt32LE(riffBody.length, 4);
    riffBody.copy(out, 8);

    const tmp = `${path}.tmp-${process.pid}`;
    fs.writeFileSync(tmp, out);
    fs.renameSync(tmp, path);
}

interface StreamInfo {
    width: number;
    height: number;
    bitCount: number;
    compression: number;
    fps: number;
    topDown: boolean;
}

export function readAvi(path: string, fpsOverride?: number): Video {
    const buf = fs.readFileSync(path);
    if (buf.length < 12 || cc(buf, 0) !== 'RIFF' || cc(buf, 8) !== 'AVI ') {
        throw new Error(`${path}: not an AVI (RIFF) file`);
    }

    const info: Partial<StreamInfo> = {};
    const framesRaw: Buffer[] = [];

    const walk = (start: number, end: number): void => {
        let off = start;
        while (off + 8 <= end) {
            const id = cc(buf, off);
            const size = buf.readUInt32LE(off + 4);
            const body = off + 8;
            if (id === 'LIST') {
                walk(body + 4, body + size);
            } else if (id === 'strh') {
                if (cc(buf, body) === 'vids') {
                    const scale = buf.readUInt32LE(body + 20);
                    const rate = buf.readUInt32LE(body + 24);
                    if (scale > 0 && rate > 0) info.fps = rate / scale;
                }
            } else if (id === 'strf' && info.width === undefined) {
                info.width = buf.readInt32LE(body + 4);
                const h = buf.readInt32LE(body + 8);
                info.height = Math.abs(h);
                info.topDown = h < 0;
                info.bitCount = buf.readUInt16LE(body + 14);
                info.compression = buf.readUInt32LE(body + 16);
            } else if (id === '00db' || id === '00dc') {
                framesRaw.push(buf.subarray(body, body + size));
            }
            off = body + size + (size % 2);
        }
    };
    walk(12, buf.length);

    if (info.width === undefined || info.height === undefined) {
        throw new Error(`${path}: no video stream format found`);
    }
    if (info.compression !== 0 || info.bitCount !== 24) {
        throw new Error(
            `${path}: unsupported codec (need uncompressed 24-bit BI_RGB; ` +
            `re-encode with: ffmpeg -i input -c:v rawvideo -pix_fmt bgr24 output.avi)`
        );
    }
    const fps = fpsOverride ?? info.fps;
    if (!fps || fps <= 0) {
        throw new Error(`${path}: no frame rate in header; pass --fps`);
    }

    const { width, height, topDown } = info as StreamInfo;
    const rowBytes = ROW_PAD(width);
    const frames: Frame[] = [];
    framesRaw.forEach((dib, index) => {
        if (dib.length < rowBytes * height) return; // ignore truncated trailing chunk
        const rgb = new Uint8Array(width * height * 3);
        for (let y = 0; y < height; y++) {
            const srcRow = (topDown ? y : height - 1 - y) * rowBytes;
            const dstRow = y * width * 3;
            for (let x = 0; x < width; x++) {
                rgb[dstRow + x * 3] = dib[srcRow + x * 3 + 2];
                rgb[dstRow + x * 3 + 1] = dib[srcRow + x * 3 + 1];
                rgb[dstRow + x * 3 + 2] = dib[srcRow + x * 3];
            }
        }
        frames.push({ index, tSeconds: index / fps, width, height, rgb });
    });

    return { width, height, fps, frames };
}
