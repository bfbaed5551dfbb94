/* tslint:disable */
/* eslint-disable */

/**
 * Trains on a synthetic station and forecasts the first held-out window.
 */
export class Forecaster {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Row of the first held-out hour.
     */
    boundary(): number;
    /**
     * `history ++ predicted ++ actual` in °C for the first held-out window.
     */
    forecast(): Float64Array;
    history_len(): number;
    horizon(): number;
    hours(): number;
    constructor(days: number, epochs: number, seed: number);
    train_mse(): Float64Array;
    val_mse(): Float64Array;
}

/**
 * Trace of a one-unit LSTM over `inputs`. Every step appends
 * `[i, f, g, o, c, h]`.
 */
export function lstm_gate_trace(inputs: Float64Array, input_weight: number, recurrent_weight: number, forget_bias: number): Float64Array;

/**
 * Hourly synthetic temperatures (°C).
 */
export function synthetic_temperature(days: number, seed: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_forecaster_free: (a: number, b: number) => void;
    readonly forecaster_boundary: (a: number) => number;
    readonly forecaster_forecast: (a: number) => [number, number];
    readonly forecaster_history_len: (a: number) => number;
    readonly forecaster_horizon: (a: number) => number;
    readonly forecaster_hours: (a: number) => number;
    readonly forecaster_new: (a: number, b: number, c: number) => [number, number, number];
    readonly forecaster_train_mse: (a: number) => [number, number];
    readonly forecaster_val_mse: (a: number) => [number, number];
    readonly lstm_gate_trace: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly synthetic_temperature: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
