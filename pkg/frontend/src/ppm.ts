/** Binary PPM (P6) decoding: header "P6", whitespace/comment-separated
 * width, height, maxval 255, one whitespace byte, then w*h*3 raw RGB bytes.
 */

export interface RgbImage {
  width: number;
  height: number;
  /** Row-major RGB triples, length = width * height * 3, values 0..255. */
  pixels: Uint8Array;
}

export class PpmError extends Error {}

const WHITESPACE = new Set([0x20, 0x09, 0x0a, 0x0d, 0x0b, 0x0c]);

function isDigit(byte: number): boolean {
  return byte >= 0x30 && byte <= 0x39;
}

/** Read the next decimal header field, skipping whitespace and # comments. */
function nextField(data: Uint8Array, pos: number): { value: number; pos: number } {
  while (pos < data.length) {
    const byte = data[pos];
    if (WHITESPACE.has(byte)) {
      pos += 1;
    } else if (byte === 0x23) {
      while (pos < data.length && data[pos] !== 0x0a) pos += 1;
    } else {
      break;
    }
  }
  if (pos >= data.length || !isDigit(data[pos])) {
    throw new PpmError("malformed header: expected a decimal field");
  }
  let value = 0;
  while (pos < data.length && isDigit(data[pos])) {
    value = value * 10 + (data[pos] - 0x30);
    pos += 1;
  }
  return { value, pos };
}

export function decodePpm(data: Uint8Array): RgbImage {
  if (data.length < 2 || data[0] !== 0x50 || data[1] !== 0x36) {
    throw new PpmError("malformed header: not a P6 PPM");
  }
  let pos = 2;
  let width: number, height: number, maxval: number;
  ({ value: width, pos } = nextField(data, pos));
  ({ value: height, pos } = nextField(data, pos));
  ({ value: maxval, pos } = nextField(data, pos));
  if (width < 1 || height < 1) {
    throw new PpmError(`bad dimensions ${width}x${height}`);
  }
  if (maxval !== 255) {
    throw new PpmError(`unsupported maxval ${maxval} (need 255)`);
  }
  if (pos >= data.length || !WHITESPACE.has(data[pos])) {
    throw new PpmError("malformed header: missing whitespace before payload");
  }
  pos += 1;
  const expected = width * height * 3;
  if (data.length - pos !== expected) {
    throw new PpmError(`payload is ${data.length - pos} bytes, expected ${expected}`);
  }
  return { width, height, pixels: data.subarray(pos, pos + expected) };
}

/** Encode an RgbImage back to canonical P6 bytes (test helper and tooling). */
export function encodePpm(img: RgbImage): Uint8Array {
  if (img.pixels.length !== img.width * img.height * 3) {
    throw new PpmError("pixel buffer does not match dimensions");
  }
  const header = new TextEncoder().encode(`P6\n${img.width} ${img.height}\n255\n`);
  const out = new Uint8Array(header.length + img.pixels.length);
  out.set(header, 0);
  out.set(img.pixels, header.length);
  return out;
}
