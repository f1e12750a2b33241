/** Input image readers: raw float32 grids and binary PGM (P5). */

import { readFileSync } from 'fs';

import { UnreadableImageError } from './errors.js';
import type { GridImage } from './types.js';

function readBytes(path: string): Buffer {
  try {
    return readFileSync(path);
  } catch (err) {
    throw new UnreadableImageError(`cannot read image file ${path}: ${err}`);
  }
}

export function checkDims(dims: number[]): number[] {
  if (dims.length < 2 || dims.length > 3 || dims.some((n) => !Number.isInteger(n) || n < 1)) {
    throw new UnreadableImageError(
      `dims must be 2 or 3 positive integers, got ${JSON.stringify(dims)}`);
  }
  return dims;
}

/** Read a row-major little-endian float32 grid of the given dims. */
export function readRawImage(path: string, dims: number[]): GridImage {
  checkDims(dims);
  const buf = readBytes(path);
  const count = dims.reduce((a, b) => a * b, 1);
  if (buf.length !== count * 4) {
    throw new UnreadableImageError(
      `${path} holds ${buf.length} bytes, expected ${count * 4} for dims ${dims}`);
  }
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    data[i] = buf.readFloatLE(i * 4);
  }
  for (let i = 0; i < count; i++) {
    if (!Number.isFinite(data[i])) {
      throw new UnreadableImageError(`${path} contains non-finite values`);
    }
  }
  return { data, dims: dims.slice() };
}

/** Read a binary PGM (P5) grayscale image; 8-bit or big-endian 16-bit. */
export function readPgm(path: string): GridImage {
  const buf = readBytes(path);
  // Header: magic, width, height, maxval as whitespace-separated tokens,
  // with '#' comments; a single whitespace byte then separates the header
  // from the pixel payload.
  let pos = 0;
  const tokens: string[] = [];
  while (tokens.length < 4 && pos < buf.length) {
    while (pos < buf.length && /\s/.test(String.fromCharCode(buf[pos]))) pos++;
    if (pos < buf.length && buf[pos] === 0x23) { // '#'
      while (pos < buf.length && buf[pos] !== 0x0a) pos++;
      continue;
    }
    let start = pos;
    while (pos < buf.length && !/\s/.test(String.fromCharCode(buf[pos]))) pos++;
    if (pos > start) tokens.push(buf.toString('ascii', start, pos));
  }
  pos++; // the single whitespace after maxval
  const [magic, widthText, heightText, maxvalText] = tokens;
  if (tokens.length < 4 || magic !== 'P5') {
    throw new UnreadableImageError(`${path} is not a binary PGM (P5) file`);
  }
  const width = Number(widthText);
  const height = Number(heightText);
  const maxval = Number(maxvalText);
  if (!Number.isInteger(width) || !Number.isInteger(height) || width < 1 || height < 1
      || !Number.isInteger(maxval) || maxval < 1 || maxval > 65535) {
    throw new UnreadableImageError(`${path} has an invalid PGM header`);
  }
  const count = width * height;
  const wide = maxval > 255;
  if (buf.length - pos !== count * (wide ? 2 : 1)) {
    throw new UnreadableImageError(
      `${path} payload is ${buf.length - pos} bytes, expected ${count * (wide ? 2 : 1)}`);
  }
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    data[i] = wide ? buf.readUInt16BE(pos + 2 * i) : buf[pos + i];
  }
  return { data, dims: [height, width] };
}

/** Dispatch on extension: .pgm is self-describing, .raw needs dims. */
export function readImageFile(path: string, dims?: number[]): GridImage {
  if (path.toLowerCase().endsWith('.pgm')) {
    return readPgm(path);
  }
  if (dims === undefined) {
    throw new UnreadableImageError(`raw image ${path} needs explicit dims`);
  }
  return readRawImage(path, dims);
}
