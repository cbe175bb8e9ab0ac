/**
 * Cursor-context capture.
 *
 * The raw text before the cursor is sent as-is; the server owns
 * tokenization so the editor never needs its own lexer and can never
 * drift from how the model's training corpus was lexed.
 */

/** Characters of prefix worth sending; plenty for any context window. */
export const MAX_CONTEXT_CHARS = 4096;

export function captureContext(documentText: string, cursorOffset: number): string {
    const bounded = Math.max(0, Math.min(cursorOffset, documentText.length));
    const prefix = documentText.slice(0, bounded);
    return prefix.length > MAX_CONTEXT_CHARS ? prefix.slice(-MAX_CONTEXT_CHARS) : prefix;
}
