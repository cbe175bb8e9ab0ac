/**
 * Rendering server suggestions as editor completion items.
 *
 * Editors re-sort completion lists; the server's ranking is encoded in
 * zero-padded sort keys so displayed order always equals server rank
 * order.  Probabilities are display-only detail text and never trigger
 * auto-acceptance.
 */

import { SuggestionResponse, UNK_LABEL } from './types';

export interface CompletionEntry {
    label: string;
    insertText: string;
    sortText: string;
    detail: string;
}

export function formatProbability(probability: number): string {
    return `${(probability * 100).toFixed(1)}%`;
}

export function presentCompletions(response: SuggestionResponse): CompletionEntry[] {
    const entries: CompletionEntry[] = [];
    for (const suggestion of response.suggestions) {
        if (suggestion.token === UNK_LABEL) {
            continue;  // an out-of-vocabulary marker is not an insertable token
        }
        entries.push({
            label: suggestion.token,
            insertText: suggestion.token,
            sortText: String(suggestion.rank).padStart(6, '0'),
            detail: formatProbability(suggestion.probability),
        });
    }
    return entries;
}
