import { describe, expect, it } from 'vitest';

import {
  DEFAULT_GENERATOR_PARAMS, labelComponents, normalizeSlice, proposeMasks,
} from '../dist/index.js';
import type { GeneratorParams } from '../dist/index.js';

function image(rows: number[][]): { data: Float32Array; dims: number[] } {
  return { data: new Float32Array(rows.flat()), dims: [rows.length, rows[0].length] };
}

/** Paint filled discs of the given intensity onto a zero background. */
function discs(dims: number[], shapes: { cy: number; cx: number; r: number; v: number }[]): Float32Array {
  const [h, w] = dims;
  const data = new Float32Array(h * w);
  for (const { cy, cx, r, v } of shapes) {
    for (let y = 0; y < h; y++) {
      for (let x = 0; x < w; x++) {
        if ((y - cy) ** 2 + (x - cx) ** 2 <= r * r) data[y * w + x] = v;
      }
    }
  }
  return data;
}

const params: GeneratorParams = { ...DEFAULT_GENERATOR_PARAMS };

describe('normalizeSlice', () => {
  it('maps the value range onto [0, 1]', () => {
    const out = normalizeSlice(new Float32Array([2, 4, 6]));
    expect(Array.from(out)).toEqual([0, 0.5, 1]);
  });

  it('maps a constant slice to all zero', () => {
    const out = normalizeSlice(new Float32Array([3, 3, 3]));
    expect(Array.from(out)).toEqual([0, 0, 0]);
  });
});

describe('labelComponents', () => {
  it('labels 4-connected regions and counts their sizes', () => {
    const { data, dims } = image([
      [1, 1, 0, 0],
      [0, 1, 0, 1],
      [0, 0, 0, 1],
    ]);
    const { labels, sizes, count } = labelComponents(data, dims[0], dims[1], 0.5);
    expect(count).toBe(2);
    expect(sizes.sort()).toEqual([2, 3]);
    expect(labels[0]).toBe(labels[1]);
    expect(labels[0]).toBe(labels[5]);
    expect(labels[7]).toBe(labels[11]);
    expect(labels[0]).not.toBe(labels[7]);
    expect(labels[2]).toBe(-1);
  });

  it('does not connect diagonals', () => {
    const { data, dims } = image([
      [1, 0],
      [0, 1],
    ]);
    const { count } = labelComponents(data, dims[0], dims[1], 0.5);
    expect(count).toBe(2);
  });
});

describe('proposeMasks', () => {
  it('finds one deduplicated mask per crisp structure, scored 1.0', () => {
    const dims = [48, 48];
    const shapes = [
      { cy: 12, cx: 12, r: 6, v: 0.5 },
      { cy: 32, cx: 34, r: 8, v: 1.0 },
    ];
    const masks = proposeMasks(discs(dims, shapes), dims, params, 0.9, 0.9);
    expect(masks).toHaveLength(2);
    for (const mask of masks) {
      expect(mask.predictedIou).toBe(1);
      expect(mask.stabilityScore).toBe(1);
      expect(Array.from(new Set(mask.bits)).sort()).toEqual([0, 1]);
      let area = 0;
      for (const b of mask.bits) area += b;
      expect(area).toBe(mask.area);
    }
    const areas = masks.map((m) => m.area).sort((a, b) => a - b);
    expect(areas[0]).toBeGreaterThan(100); // r=6 disc
    expect(areas[1]).toBeGreaterThan(190); // r=8 disc
  });

  it('returns nothing for a blank or constant slice', () => {
    expect(proposeMasks(new Float32Array(16 * 16), [16, 16], params, 0.9, 0.9)).toEqual([]);
    expect(proposeMasks(new Float32Array(16 * 16).fill(7), [16, 16], params, 0.9, 0.9)).toEqual([]);
  });

  it('drops unstable fuzzy regions at 0.9 but keeps them at 0', () => {
    // A soft linear ramp blob: every threshold cuts it at a different size,
    // so stability is far below 1.
    const dims = [32, 32];
    const data = new Float32Array(32 * 32);
    for (let y = 0; y < 32; y++) {
      for (let x = 0; x < 32; x++) {
        const d = Math.hypot(y - 16, x - 16);
        data[y * 32 + x] = Math.max(0, 1 - d / 14);
      }
    }
    const strict = proposeMasks(data, dims, params, 0.9, 0.9);
    const loose = proposeMasks(data, dims, params, 0, 0);
    expect(loose.length).toBeGreaterThan(strict.length);
    for (const m of loose) {
      expect(m.predictedIou).toBeGreaterThanOrEqual(0);
      expect(m.predictedIou).toBeLessThanOrEqual(1);
      expect(m.stabilityScore).toBeGreaterThanOrEqual(0);
      expect(m.stabilityScore).toBeLessThanOrEqual(1);
    }
  });

  it('caps the proposal count at maxMasks, best quality first', () => {
    // A grid of specks, each its own component at every level.
    const dims = [30, 30];
    const data = new Float32Array(30 * 30);
    for (let y = 1; y < 30; y += 3) {
      for (let x = 1; x < 30; x += 3) {
        data[y * 30 + x] = 1;
      }
    }
    const capped = proposeMasks(data, dims, { ...params, maxMasks: 5 }, 0, 0);
    expect(capped).toHaveLength(5);
  });

  it('is deterministic', () => {
    const dims = [40, 40];
    const data = discs(dims, [{ cy: 20, cx: 20, r: 9, v: 0.8 }]);
    const a = proposeMasks(data, dims, params, 0.9, 0.9);
    const b = proposeMasks(data, dims, params, 0.9, 0.9);
    expect(a.length).toBe(b.length);
    a.forEach((mask, i) => {
      expect(Buffer.from(mask.bits).equals(Buffer.from(b[i].bits))).toBe(true);
      expect(mask.predictedIou).toBe(b[i].predictedIou);
      expect(mask.stabilityScore).toBe(b[i].stabilityScore);
    });
  });
});
