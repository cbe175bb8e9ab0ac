/**
 * HTTP client for the suggestion server.
 *
 * Every failure mode maps to a Degradation value instead of a thrown
 * error: the editor's native completion must keep working whether the
 * server is down, slow, or speaking nonsense.  At most one request is
 * in flight per document; a newer trigger aborts the pending one.
 */

import { ClientSettings, Degradation, RequestOutcome, Suggestion, SuggestionResponse } from './types';

export type Logger = (message: string) => void;

function degraded(reason: Degradation['reason'], detail: string): Degradation {
    return { kind: 'degraded', reason, detail };
}

function isSuggestion(value: unknown): value is Suggestion {
    const s = value as Suggestion;
    return !!s && typeof s.token === 'string' && typeof s.probability === 'number'
        && typeof s.rank === 'number';
}

function parseResponse(body: unknown): SuggestionResponse | null {
    const r = body as SuggestionResponse;
    if (!r || !Array.isArray(r.suggestions) || typeof r.model_kind !== 'string') {
        return null;
    }
    if (!r.suggestions.every(isSuggestion)) {
        return null;
    }
    return { suggestions: r.suggestions, model_kind: r.model_kind, latency_ms: Number(r.latency_ms) };
}

export async function requestSuggestions(
    settings: ClientSettings,
    rawCode: string,
    signal?: AbortSignal,
    log: Logger = () => undefined,
): Promise<RequestOutcome> {
    const timeout = AbortSignal.timeout(settings.requestTimeoutMs);
    const combined = signal ? AbortSignal.any([signal, timeout]) : timeout;
    let response: Response;
    try {
        response = await fetch(`${settings.serverUrl}/v1/suggest`, {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify({ raw_code: rawCode, k: settings.suggestionCount }),
            signal: combined,
        });
    } catch (err) {
        if (signal?.aborted) {
            return degraded('cancelled', 'superseded by a newer request');
        }
        if (timeout.aborted) {
            log(`codeseer: request timed out after ${settings.requestTimeoutMs}ms`);
            return degraded('timeout', `no answer within ${settings.requestTimeoutMs}ms`);
        }
        log(`codeseer: server unreachable: ${String(err)}`);
        return degraded('unreachable', String(err));
    }
    if (!response.ok) {
        const detail = `server answered ${response.status}`;
        log(`codeseer: ${detail}`);
        return degraded('server-error', detail);
    }
    let body: unknown;
    try {
        body = await response.json();
    } catch (err) {
        log(`codeseer: unparseable response body: ${String(err)}`);
        return degraded('malformed', 'response body is not JSON');
    }
    const parsed = parseResponse(body);
    if (!parsed) {
        log('codeseer: response body missing required fields');
        return degraded('malformed', 'response body missing required fields');
    }
    return { kind: 'ok', response: parsed };
}

/** Serializes requests per document: a newer trigger cancels the pending one. */
export class SuggestionRequester {
    private inFlight = new Map<string, AbortController>();

    constructor(private readonly log: Logger = () => undefined) {}

    async request(documentId: string, settings: ClientSettings,
                  rawCode: string): Promise<RequestOutcome> {
        this.inFlight.get(documentId)?.abort();
        const controller = new AbortController();
        this.inFlight.set(documentId, controller);
        try {
            return await requestSuggestions(settings, rawCode, controller.signal, this.log);
        } finally {
            if (this.inFlight.get(documentId) === controller) {
                this.inFlight.delete(documentId);
            }
        }
    }

    cancelAll(): void {
        for (const controller of this.inFlight.values()) {
            controller.abort();
        }
        this.inFlight.clear();
    }
}
