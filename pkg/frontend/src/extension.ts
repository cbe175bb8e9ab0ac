/**
 * VS Code wiring: a completion provider plus a manual trigger command.
 *
 * All the behavior lives in the editor-agnostic modules (context,
 * client, completions); this file only adapts VS Code's API to them.
 * Degradations surface as a transient status-bar note, never as an
 * error popup, and never block the native completion engine.
 */

import * as vscode from 'vscode';

import { SuggestionRequester } from './client';
import { presentCompletions } from './completions';
import { captureContext } from './context';
import { ClientSettings, normalizeSettings } from './types';

function currentSettings(): ClientSettings {
    const config = vscode.workspace.getConfiguration('codeseer');
    return normalizeSettings({
        serverUrl: config.get<string>('serverUrl'),
        suggestionCount: config.get<number>('suggestionCount'),
        triggerMode: config.get<'manual' | 'on-type'>('triggerMode'),
        requestTimeoutMs: config.get<number>('requestTimeoutMs'),
    });
}

export function activate(context: vscode.ExtensionContext): void {
    const output = vscode.window.createOutputChannel('codeseer');
    const status = vscode.window.createStatusBarItem(vscode.StatusBarAlignment.Right, 50);
    const requester = new SuggestionRequester((msg) => output.appendLine(msg));

    async function completionsAt(document: vscode.TextDocument,
                                 position: vscode.Position): Promise<vscode.CompletionItem[]> {
        const rawCode = captureContext(document.getText(), document.offsetAt(position));
        const outcome = await requester.request(document.uri.toString(),
                                                currentSettings(), rawCode);
        if (outcome.kind === 'degraded') {
            if (outcome.reason !== 'cancelled') {
                status.text = '$(cloud-offline) codeseer';
                status.tooltip = `suggestion server ${outcome.reason}: ${outcome.detail}`;
                status.show();
            }
            return [];
        }
        status.hide();
        return presentCompletions(outcome.response).map((entry) => {
            const item = new vscode.CompletionItem(entry.label,
                                                   vscode.CompletionItemKind.Text);
            item.insertText = entry.insertText;
            item.sortText = entry.sortText;
            item.detail = entry.detail;
            return item;
        });
    }

    // the keybinding arms one provider pass, so manual mode costs nothing
    // while idle and on-type mode can stay opt-in
    let manualArmed = false;

    const provider: vscode.CompletionItemProvider = {
        provideCompletionItems(document, position) {
            if (currentSettings().triggerMode !== 'on-type' && !manualArmed) {
                return [];
            }
            manualArmed = false;
            return completionsAt(document, position);
        },
    };

    context.subscriptions.push(
        output,
        status,
        vscode.languages.registerCompletionItemProvider({ scheme: 'file' }, provider),
        vscode.commands.registerCommand('codeseer.suggest', async () => {
            if (!vscode.window.activeTextEditor) {
                return;
            }
            manualArmed = true;
            await vscode.commands.executeCommand('editor.action.triggerSuggest');
        }),
        { dispose: () => requester.cancelAll() },
    );
}

export function deactivate(): void {
    // subscriptions dispose the requester and UI handles
}
