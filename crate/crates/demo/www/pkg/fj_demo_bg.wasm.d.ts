/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const karate_broadcast: (a: number, b: number) => [number, number, number, number];
export const karate_classical: () => [number, number];
export const karate_edges: () => [number, number];
export const karate_layout: () => [number, number];
export const karate_steady_state: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_start: () => void;
