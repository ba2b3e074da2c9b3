/* tslint:disable */
/* eslint-disable */

/**
 * `[c_max, c_min, c_3, zeta3, euler_gamma]`
 */
export function constants(): Float64Array;

/**
 * Rows `[log10 r, L(r), L'(r), L''(r)]` over a log-spaced grid of r.
 */
export function log_moment_curve(large: boolean, log10_lo: number, log10_hi: number, steps: number): Float64Array;

/**
 * Histogram of log|L(1, 𝕏; y)| over `samples` draws.
 *
 * Layout: `[lo, hi, phi_hat, psi_hat, count_0, …, count_{bins-1}]` where
 * the bins split [lo, hi] evenly and the two proportions are the sampled
 * tails at `tau`.
 */
export function mc_histogram(seed: bigint, y: bigint, samples: bigint, bins: number, tau: number): Float64Array;

/**
 * Rows `[tau, log10 saddle, log10 asymptotic]` for Φ (`large`) or Ψ.
 * Taus where the saddle point cannot be found carry NaN.
 */
export function tail_curves(large: boolean, tau_lo: number, tau_hi: number, steps: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly constants: () => [number, number];
    readonly log_moment_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly mc_histogram: (a: bigint, b: bigint, c: bigint, d: number, e: number) => [number, number, number, number];
    readonly tail_curves: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
