/** Tiny 8x8 digit dataset: a fixed glyph per class, augmented with seeded
 *  shifts, intensity scaling and pixel noise. Values lie in [0, 1]. */

import { Rng } from "./tensor.js";

const GLYPHS = [
    ["........", ".XXXXX..", ".X...X..", ".X...X..", ".X...X..", ".X...X..", ".XXXXX..", "........"],
    ["........", "...XX...", "..XXX...", "...XX...", "...XX...", "...XX...", ".XXXXXX.", "........"],
    ["........", ".XXXXX..", ".....X..", ".XXXXX..", ".X......", ".X......", ".XXXXX..", "........"],
    ["........", ".XXXXX..", ".....X..", "..XXXX..", ".....X..", ".....X..", ".XXXXX..", "........"],
    ["........", ".X...X..", ".X...X..", ".XXXXX..", ".....X..", ".....X..", ".....X..", "........"],
    ["........", ".XXXXX..", ".X......", ".XXXXX..", ".....X..", ".....X..", ".XXXXX..", "........"],
    ["........", ".XXXXX..", ".X......", ".XXXXX..", ".X...X..", ".X...X..", ".XXXXX..", "........"],
    ["........", ".XXXXXX.", ".....X..", "....X...", "...X....", "..X.....", "..X.....", "........"],
    ["........", ".XXXXX..", ".X...X..", ".XXXXX..", ".X...X..", ".X...X..", ".XXXXX..", "........"],
    ["........", ".XXXXX..", ".X...X..", ".XXXXX..", ".....X..", ".....X..", ".XXXXX..", "........"],
];

export const IMAGE_SIDE = 8;
export const IMAGE_DIM = IMAGE_SIDE * IMAGE_SIDE;

function glyphPixels(digit: number): Float64Array {
    const out = new Float64Array(IMAGE_DIM);
    const rows = GLYPHS[digit];
    for (let r = 0; r < IMAGE_SIDE; r++) {
        for (let c = 0; c < IMAGE_SIDE; c++) {
            out[r * IMAGE_SIDE + c] = rows[r][c] === "X" ? 1 : 0;
        }
    }
    return out;
}

/** One augmented sample of the given digit class. */
export function digitSample(digit: number, rng: Rng): Float64Array {
    const base = glyphPixels(digit);
    const dr = rng.int(3) - 1;
    const dc = rng.int(3) - 1;
    const gain = rng.uniform(0.75, 1.0);
    const noise = 0.06;
    const out = new Float64Array(IMAGE_DIM);
    for (let r = 0; r < IMAGE_SIDE; r++) {
        for (let c = 0; c < IMAGE_SIDE; c++) {
            const sr = r - dr;
            const sc = c - dc;
            let v = 0;
            if (sr >= 0 && sr < IMAGE_SIDE && sc >= 0 && sc < IMAGE_SIDE) {
                v = base[sr * IMAGE_SIDE + sc];
            }
            v = gain * v + noise * rng.normal();
            out[r * IMAGE_SIDE + c] = Math.min(1, Math.max(0, v));
        }
    }
    return out;
}

export interface DigitDataset {
    images: Float64Array[];
    labels: number[];
}

export function makeDigitDataset(count: number, seed: number): DigitDataset {
    const base = new Rng(seed);
    const images: Float64Array[] = [];
    const labels: number[] = [];
    for (let i = 0; i < count; i++) {
        const rng = base.substream(i);
        const digit = rng.int(10);
        labels.push(digit);
        images.push(digitSample(digit, rng));
    }
    return { images, labels };
}
