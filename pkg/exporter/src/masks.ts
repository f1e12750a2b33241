/** Everything-mode mask proposal generator (the built-in model variant).
 *
 * Proposals are connected components of the normalized slice across a ladder
 * of intensity thresholds, scored the way prompt-free segmenters score their
 * outputs: a stability score from perturbing the threshold, and a predicted
 * quality score from re-extracting the region at its own contrast midpoint.
 * Area and overlap pruning are deliberately NOT done here; the consuming
 * engine owns candidate filtering.
 */

import { createHash } from 'crypto';

import type { GeneratorParams, MaskProposal } from './types.js';

/** Normalize to [0, 1]; a constant slice comes back all zero. */
export function normalizeSlice(data: Float32Array): Float32Array {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of data) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  const out = new Float32Array(data.length);
  if (hi > lo) {
    const scale = 1 / (hi - lo);
    for (let i = 0; i < data.length; i++) out[i] = (data[i] - lo) * scale;
  }
  return out;
}

interface Labeling {
  labels: Int32Array;       // -1 for background
  sizes: number[];          // pixel count per label
  count: number;
}

/** 4-connected components of {v >= threshold}. */
export function labelComponents(v: Float32Array, height: number, width: number,
                                threshold: number): Labeling {
  const labels = new Int32Array(v.length).fill(-1);
  const sizes: number[] = [];
  const stack = new Int32Array(v.length);
  let count = 0;
  for (let seed = 0; seed < v.length; seed++) {
    if (v[seed] < threshold || labels[seed] !== -1) continue;
    const label = count++;
    let size = 0;
    let top = 0;
    stack[top++] = seed;
    labels[seed] = label;
    while (top > 0) {
      const p = stack[--top];
      size++;
      const y = (p / width) | 0;
      const x = p - y * width;
      if (y > 0 && v[p - width] >= threshold && labels[p - width] === -1) {
        labels[p - width] = label;
        stack[top++] = p - width;
      }
      if (y + 1 < height && v[p + width] >= threshold && labels[p + width] === -1) {
        labels[p + width] = label;
        stack[top++] = p + width;
      }
      if (x > 0 && v[p - 1] >= threshold && labels[p - 1] === -1) {
        labels[p - 1] = label;
        stack[top++] = p - 1;
      }
      if (x + 1 < width && v[p + 1] >= threshold && labels[p + 1] === -1) {
        labels[p + 1] = label;
        stack[top++] = p + 1;
      }
    }
    sizes.push(size);
  }
  return { labels, sizes, count };
}

/** IoU between the component and its re-extraction at the midpoint between
 * inside and boundary-ring mean intensity, within the looser component. */
function predictedIouScore(v: Float32Array, height: number, width: number,
                           pixels: number[], loLabels: Int32Array,
                           loLabel: number): number {
  let sumIn = 0;
  let ringSum = 0;
  let ringCount = 0;
  const inComponent = new Set(pixels);
  for (const p of pixels) {
    sumIn += v[p];
    const y = (p / width) | 0;
    const x = p - y * width;
    for (const q of [y > 0 ? p - width : -1, y + 1 < height ? p + width : -1,
                     x > 0 ? p - 1 : -1, x + 1 < width ? p + 1 : -1]) {
      if (q >= 0 && !inComponent.has(q)) {
        ringSum += v[q];
        ringCount++;
      }
    }
  }
  const meanIn = sumIn / pixels.length;
  const meanRing = ringCount > 0 ? ringSum / ringCount : 0;
  const tMid = (meanIn + meanRing) / 2;

  let intersection = 0;
  let refinedSize = 0;
  for (let p = 0; p < v.length; p++) {
    if (loLabels[p] === loLabel && v[p] >= tMid) {
      refinedSize++;
      if (inComponent.has(p)) intersection++;
    }
  }
  const union = pixels.length + refinedSize - intersection;
  return union > 0 ? intersection / union : 0;
}

interface Candidate extends MaskProposal {
  order: number;
  key: string;
}

/** Run the threshold ladder over one 2D slice and return the surviving,
 * de-duplicated proposals in discovery order. */
export function proposeMasks(slice: Float32Array, dims: number[],
                             params: GeneratorParams,
                             predIouThresh: number,
                             stabilityScoreThresh: number): MaskProposal[] {
  const [height, width] = dims;
  const v = normalizeSlice(slice);
  const byKey = new Map<string, Candidate>();
  let order = 0;

  for (const t of params.levels) {
    const at = labelComponents(v, height, width, t);
    if (at.count === 0) continue;
    const lo = labelComponents(v, height, width, t - params.stabilityDelta);

    const pixelsByLabel: number[][] = Array.from({ length: at.count }, () => []);
    for (let p = 0; p < v.length; p++) {
      if (at.labels[p] !== -1) pixelsByLabel[at.labels[p]].push(p);
    }

    for (let label = 0; label < at.count; label++) {
      const pixels = pixelsByLabel[label];
      // The tighter mask at t + delta is nested inside this component, and
      // this component is nested inside one looser component at t - delta,
      // so the stability IoU reduces to a size ratio.
      let hiSize = 0;
      for (const p of pixels) {
        if (v[p] >= t + params.stabilityDelta) hiSize++;
      }
      const loLabel = lo.labels[pixels[0]];
      const stability = hiSize / lo.sizes[loLabel];
      const predicted = predictedIouScore(v, height, width, pixels, lo.labels, loLabel);
      if (stability < stabilityScoreThresh || predicted < predIouThresh) continue;

      const bits = new Uint8Array(v.length);
      for (const p of pixels) bits[p] = 1;
      const key = createHash('sha1').update(bits).digest('hex');
      const candidate: Candidate = {
        bits, dims: dims.slice(), area: pixels.length,
        predictedIou: predicted, stabilityScore: stability,
        order: order++, key,
      };
      const seen = byKey.get(key);
      if (seen === undefined
          || candidate.predictedIou > seen.predictedIou
          || (candidate.predictedIou === seen.predictedIou
              && candidate.stabilityScore > seen.stabilityScore)) {
        byKey.set(key, { ...candidate, order: seen?.order ?? candidate.order });
      }
    }
  }

  let kept = Array.from(byKey.values());
  if (kept.length > params.maxMasks) {
    kept.sort((a, b) => b.predictedIou - a.predictedIou
      || b.area - a.area || a.order - b.order);
    kept = kept.slice(0, params.maxMasks);
  }
  kept.sort((a, b) => a.order - b.order);
  return kept.map(({ bits, dims: d, area, predictedIou, stabilityScore }) =>
    ({ bits, dims: d, area, predictedIou, stabilityScore }));
}
