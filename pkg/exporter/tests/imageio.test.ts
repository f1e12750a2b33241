import { mkdtempSync, writeFileSync } from 'fs';
import { tmpdir } from 'os';
import { join } from 'path';

import { beforeAll, describe, expect, it } from 'vitest';

import {
  UnreadableImageError, float32Bytes, readImageFile, readPgm, readRawImage,
} from '../dist/index.js';

let dir: string;

beforeAll(() => {
  dir = mkdtempSync(join(tmpdir(), 'exporter-io-'));
});

function writeRaw(name: string, values: number[]): string {
  const path = join(dir, name);
  writeFileSync(path, float32Bytes(new Float32Array(values)));
  return path;
}

function writePgm(name: string, header: string, payload: number[] | Buffer): string {
  const path = join(dir, name);
  writeFileSync(path, Buffer.concat([
    Buffer.from(header, 'ascii'),
    Buffer.isBuffer(payload) ? payload : Buffer.from(payload),
  ]));
  return path;
}

describe('readRawImage', () => {
  it('round-trips little-endian float32 grids', () => {
    const path = writeRaw('a.raw', [0, 1, 2, 3, 4, 5]);
    const image = readRawImage(path, [2, 3]);
    expect(Array.from(image.data)).toEqual([0, 1, 2, 3, 4, 5]);
    expect(image.dims).toEqual([2, 3]);
  });

  it('rejects size mismatches', () => {
    const path = writeRaw('b.raw', [0, 1, 2]);
    expect(() => readRawImage(path, [2, 2])).toThrow(UnreadableImageError);
    expect(() => readRawImage(path, [2, 2])).toThrow(/12 bytes, expected 16/);
  });

  it('rejects missing files and bad dims', () => {
    expect(() => readRawImage(join(dir, 'nope.raw'), [2, 2])).toThrow(UnreadableImageError);
    expect(() => readRawImage(writeRaw('c.raw', [1]), [1])).toThrow(UnreadableImageError);
    expect(() => readRawImage(writeRaw('d.raw', [1]), [0, 1])).toThrow(UnreadableImageError);
  });

  it('rejects non-finite voxels', () => {
    const path = join(dir, 'nan.raw');
    const buf = Buffer.alloc(16);
    buf.writeFloatLE(NaN, 4);
    writeFileSync(path, buf);
    expect(() => readRawImage(path, [2, 2])).toThrow(/non-finite/);
  });
});

describe('readPgm', () => {
  it('reads 8-bit binary PGM', () => {
    const path = writePgm('a.pgm', 'P5\n3 2\n255\n', [0, 50, 100, 150, 200, 250]);
    const image = readPgm(path);
    expect(image.dims).toEqual([2, 3]);
    expect(Array.from(image.data)).toEqual([0, 50, 100, 150, 200, 250]);
  });

  it('reads big-endian 16-bit PGM and skips comments', () => {
    const payload = Buffer.alloc(8);
    [1000, 2000, 3000, 65535].forEach((v, i) => payload.writeUInt16BE(v, 2 * i));
    const path = writePgm('b.pgm', 'P5\n# a comment\n2 2\n65535\n', payload);
    const image = readPgm(path);
    expect(Array.from(image.data)).toEqual([1000, 2000, 3000, 65535]);
  });

  it('rejects wrong magic, bad header, truncated payload', () => {
    expect(() => readPgm(writePgm('c.pgm', 'P2\n2 2\n255\n', [1, 2, 3, 4])))
      .toThrow(UnreadableImageError);
    expect(() => readPgm(writePgm('d.pgm', 'P5\n0 2\n255\n', [])))
      .toThrow(UnreadableImageError);
    expect(() => readPgm(writePgm('e.pgm', 'P5\n2 2\n255\n', [1, 2, 3])))
      .toThrow(/payload is 3 bytes, expected 4/);
    expect(() => readPgm(writePgm('f.pgm', 'P5\n2 2\n70000\n', [1, 2, 3, 4])))
      .toThrow(UnreadableImageError);
  });
});

describe('readImageFile', () => {
  it('dispatches .pgm without dims and .raw with dims', () => {
    const pgm = writePgm('g.pgm', 'P5\n2 2\n255\n', [9, 8, 7, 6]);
    expect(readImageFile(pgm).dims).toEqual([2, 2]);
    const raw = writeRaw('h.raw', [1, 2, 3, 4]);
    expect(readImageFile(raw, [2, 2]).dims).toEqual([2, 2]);
    expect(() => readImageFile(raw)).toThrow(/needs explicit dims/);
  });
});
