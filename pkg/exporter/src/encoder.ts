/** Built-in feature encoder.
 *
 * Produces a channel-major feature grid of local image statistics: block
 * means of intensity, squared intensity, gradient magnitude, and inverted
 * intensity.  The channel ratios vary with local appearance, so mask-pooled
 * prototypes of distinct structures point in distinct directions even under
 * the scale-invariant similarity the engine uses.  Blocks follow the same
 * floor(i * n / g) partition the engine uses to pool masks onto the grid.
 */

import { normalizeSlice } from './masks.js';

export const FEATURE_CHANNELS = 4;

export interface EncodedSlice {
  /** Channel-major row-major grid: [channel][gy][gx] flattened. */
  data: Float32Array;
  gridDims: number[];
}

function blockEdges(n: number, cells: number): number[] {
  const edges: number[] = [];
  for (let i = 0; i <= cells; i++) {
    edges.push(Math.floor((i * n) / cells));
  }
  return edges;
}

/** Per-pixel gradient magnitude via central differences (one-sided at the
 * border), on the normalized slice. */
function gradientMagnitude(v: Float32Array, height: number, width: number): Float32Array {
  const out = new Float32Array(v.length);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const p = y * width + x;
      const y0 = Math.max(0, y - 1);
      const y1 = Math.min(height - 1, y + 1);
      const x0 = Math.max(0, x - 1);
      const x1 = Math.min(width - 1, x + 1);
      const gy = (v[y1 * width + x] - v[y0 * width + x]) / (y1 - y0 || 1);
      const gx = (v[y * width + x1] - v[y * width + x0]) / (x1 - x0 || 1);
      out[p] = Math.hypot(gy, gx);
    }
  }
  return out;
}

/** Encode one 2D slice onto a ceil(dim / stride) feature grid. */
export function encodeSlice(slice: Float32Array, dims: number[], stride: number): EncodedSlice {
  const [height, width] = dims;
  const gy = Math.max(1, Math.ceil(height / stride));
  const gx = Math.max(1, Math.ceil(width / stride));
  const v = normalizeSlice(slice);
  const grad = gradientMagnitude(v, height, width);

  const yEdges = blockEdges(height, gy);
  const xEdges = blockEdges(width, gx);
  const data = new Float32Array(FEATURE_CHANNELS * gy * gx);
  const cells = gy * gx;
  for (let cy = 0; cy < gy; cy++) {
    for (let cx = 0; cx < gx; cx++) {
      let mean = 0;
      let meanSq = 0;
      let meanGrad = 0;
      let count = 0;
      for (let y = yEdges[cy]; y < yEdges[cy + 1]; y++) {
        for (let x = xEdges[cx]; x < xEdges[cx + 1]; x++) {
          const val = v[y * width + x];
          mean += val;
          meanSq += val * val;
          meanGrad += grad[y * width + x];
          count++;
        }
      }
      mean /= count;
      meanSq /= count;
      meanGrad /= count;
      const cell = cy * gx + cx;
      data[cell] = mean;
      data[cells + cell] = meanSq;
      data[2 * cells + cell] = meanGrad;
      data[3 * cells + cell] = 1 - mean;
    }
  }
  return { data, gridDims: [gy, gx] };
}

/** Encode a 3D volume slice by slice along axis 0 and stack the grids into
 * a (channels, z, gy, gx) channel-major feature volume. */
export function encodeVolume(volume: Float32Array, dims: number[], stride: number): EncodedSlice {
  const [depth, height, width] = dims;
  const sliceLen = height * width;
  const slices: EncodedSlice[] = [];
  for (let z = 0; z < depth; z++) {
    slices.push(encodeSlice(volume.subarray(z * sliceLen, (z + 1) * sliceLen),
                            [height, width], stride));
  }
  const [gy, gx] = slices[0].gridDims;
  const cells = gy * gx;
  const data = new Float32Array(FEATURE_CHANNELS * depth * cells);
  for (let c = 0; c < FEATURE_CHANNELS; c++) {
    for (let z = 0; z < depth; z++) {
      data.set(slices[z].data.subarray(c * cells, (c + 1) * cells),
               c * depth * cells + z * cells);
    }
  }
  return { data, gridDims: [depth, gy, gx] };
}
