/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const decay_profile: (a: number, b: number, c: number) => [number, number];
export const resolvent_landscape: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number) => [number, number];
export const scalar_conjugacy: (a: number, b: number, c: number, d: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
