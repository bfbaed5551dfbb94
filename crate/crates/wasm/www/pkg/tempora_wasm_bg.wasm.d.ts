/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_forecaster_free: (a: number, b: number) => void;
export const forecaster_boundary: (a: number) => number;
export const forecaster_forecast: (a: number) => [number, number];
export const forecaster_history_len: (a: number) => number;
export const forecaster_horizon: (a: number) => number;
export const forecaster_hours: (a: number) => number;
export const forecaster_new: (a: number, b: number, c: number) => [number, number, number];
export const forecaster_train_mse: (a: number) => [number, number];
export const forecaster_val_mse: (a: number) => [number, number];
export const lstm_gate_trace: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const synthetic_temperature: (a: number, b: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_start: () => void;
