/**
 * Wire types for the suggestion server and client-side settings.
 */

export interface Suggestion {
    token: string;
    probability: number;
    rank: number;
}

export interface SuggestionResponse {
    suggestions: Suggestion[];
    model_kind: string;
    latency_ms: number;
}

/** Suggestions the server labels as out-of-vocabulary; never shown. */
export const UNK_LABEL = '⟨unk⟩';

export type TriggerMode = 'manual' | 'on-type';

export interface ClientSettings {
    serverUrl: string;
    suggestionCount: number;
    triggerMode: TriggerMode;
    requestTimeoutMs: number;
}

export const DEFAULT_SETTINGS: ClientSettings = {
    serverUrl: 'http://127.0.0.1:8321',
    suggestionCount: 10,
    triggerMode: 'manual',
    requestTimeoutMs: 500,
};

export function normalizeSettings(partial: Partial<ClientSettings>): ClientSettings {
    const settings = { ...DEFAULT_SETTINGS, ...partial };
    if (!Number.isInteger(settings.suggestionCount) || settings.suggestionCount < 1) {
        settings.suggestionCount = DEFAULT_SETTINGS.suggestionCount;
    }
    if (!(settings.requestTimeoutMs > 0)) {
        settings.requestTimeoutMs = DEFAULT_SETTINGS.requestTimeoutMs;
    }
    settings.serverUrl = settings.serverUrl.replace(/\/+$/, '');
    return settings;
}

/** Why a request produced no suggestions; the editor keeps working. */
export interface Degradation {
    kind: 'degraded';
    reason: 'unreachable' | 'timeout' | 'cancelled' | 'malformed' | 'server-error';
    detail: string;
}

export interface Success {
    kind: 'ok';
    response: SuggestionResponse;
}

export type RequestOutcome = Success | Degradation;
