/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const constants: () => [number, number];
export const log_moment_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const mc_histogram: (a: bigint, b: bigint, c: bigint, d: number, e: number) => [number, number, number, number];
export const tail_curves: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
