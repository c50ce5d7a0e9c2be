import { describe, expect, it } from "vitest";
import { PpmError, decodePpm, encodePpm } from "../src/ppm.js";

function ppmBytes(header: string, payload: number[]): Uint8Array {
  const head = new TextEncoder().encode(header);
  return Uint8Array.from([...head, ...payload]);
}

describe("decodePpm", () => {
  it("decodes a 2x1 image", () => {
    const img = decodePpm(ppmBytes("P6\n2 1\n255\n", [255, 0, 0, 0, 0, 255]));
    expect(img.width).toBe(2);
    expect(img.height).toBe(1);
    expect(Array.from(img.pixels)).toEqual([255, 0, 0, 0, 0, 255]);
  });

  it("skips header comments", () => {
    const img = decodePpm(ppmBytes("P6\n# made by hand\n1 1\n# again\n255\n", [9, 8, 7]));
    expect(Array.from(img.pixels)).toEqual([9, 8, 7]);
  });

  it("round-trips through encodePpm", () => {
    const original = { width: 3, height: 2, pixels: Uint8Array.from({ length: 18 }, (_, i) => i * 13 % 256) };
    const decoded = decodePpm(encodePpm(original));
    expect(decoded).toEqual(original);
  });

  it("rejects non-P6 magic", () => {
    expect(() => decodePpm(ppmBytes("P3\n1 1\n255\n", [1, 2, 3]))).toThrow(PpmError);
    expect(() => decodePpm(new Uint8Array([]))).toThrow(PpmError);
  });

  it("rejects maxval other than 255", () => {
    expect(() => decodePpm(ppmBytes("P6\n1 1\n65535\n", [1, 2, 3]))).toThrow(/maxval/);
  });

  it("rejects truncated payloads", () => {
    expect(() => decodePpm(ppmBytes("P6\n2 2\n255\n", [1, 2, 3]))).toThrow(/payload/);
  });

  it("rejects oversized payloads", () => {
    expect(() => decodePpm(ppmBytes("P6\n1 1\n255\n", [1, 2, 3, 4]))).toThrow(/payload/);
  });

  it("rejects missing header fields", () => {
    expect(() => decodePpm(ppmBytes("P6\n2\n255\n", []))).toThrow(PpmError);
  });
});
