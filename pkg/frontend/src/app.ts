/**
 * Keyboard-first triage surface: A accepts, R rejects, S skips.
 *
 * The service is the only source of truth. Everything on screen comes
 * from an API response; the stats panel refreshes from each POST reply,
 * the card advances optimistically, and a 409 marks the image as already
 * reviewed and moves on. The only client-side state is the skip set and
 * the in-session decision ledger guarding against conflicting verdicts.
 */

import {
    PromptRow,
    QueueRecord,
    TriageClient,
    TriageStats,
    Verdict,
} from './api.js';
import { ReviewSession } from './session.js';

type SortKey = 'batting_average' | 'accepted' | 'generated' | 'id';

export interface App {
    root: HTMLElement;
    client: TriageClient;
    idle(): Promise<void>;
    dispose(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
    doc: Document, tag: K, className?: string, text?: string,
): HTMLElementTagNameMap[K] {
    const node = doc.createElement(tag);
    if (className) {
        node.className = className;
    }
    if (text !== undefined) {
        node.textContent = text;
    }
    return node;
}

function pct(value: number | null): string {
    return value === null ? '—' : `${Math.round(value * 100)}%`;
}

function avgText(value: number | null): string {
    return value === null ? '—' : value.toFixed(2);
}

export function createApp(root: HTMLElement, client: TriageClient,
                          reviewer: string): App {
    const doc = root.ownerDocument;
    const session = new ReviewSession(client);

    let current: QueueRecord | null = null;
    let promptTexts = new Map<string, string>();
    let promptRows: PromptRow[] = [];
    let sortKey: SortKey = 'batting_average';
    let sortAsc = false;
    let busy = 0;
    let handlingKey = false;
    let pendingDecision: { record: QueueRecord; verdict: Verdict } | null = null;
    const waiters: Array<() => void> = [];

    function track<T>(work: Promise<T>): Promise<T> {
        busy += 1;
        return work.finally(() => {
            busy -= 1;
            if (busy === 0) {
                while (waiters.length > 0) {
                    waiters.shift()!();
                }
            }
        });
    }

    // --- static skeleton ---

    root.innerHTML = '';
    const header = el(doc, 'header');
    header.appendChild(el(doc, 'h1', '', 'facade triage'));
    const statsPanel = el(doc, 'section', 'stats-panel');
    const overallLine = el(doc, 'p', 'overall-line', 'loading…');
    const labelBars = el(doc, 'div', 'label-bars');
    statsPanel.appendChild(overallLine);
    statsPanel.appendChild(labelBars);

    const card = el(doc, 'figure', 'card');
    const image = el(doc, 'img', 'review-image');
    image.id = 'current-image';
    const caption = el(doc, 'figcaption');
    const banner = el(doc, 'div', 'banner hidden');
    const emptyNote = el(doc, 'p', 'queue-empty hidden',
                         'queue drained: nothing pending');
    card.appendChild(image);
    card.appendChild(caption);

    const hints = el(doc, 'p', 'hints',
                     '[A] accept   [R] reject   [S] skip');

    const dashboard = el(doc, 'aside', 'prompt-dashboard');
    dashboard.appendChild(el(doc, 'h2', '', 'prompt batting averages'));
    const promptTable = el(doc, 'table', 'prompt-table');
    const promptError = el(doc, 'p', 'prompt-error hidden');
    const promptStatus = el(doc, 'p', 'prompt-status');
    const controls = el(doc, 'div', 'promote-controls');
    const minSamplesInput = el(doc, 'input') as HTMLInputElement;
    minSamplesInput.type = 'number';
    minSamplesInput.value = '5';
    minSamplesInput.className = 'min-samples';
    const thresholdInput = el(doc, 'input') as HTMLInputElement;
    thresholdInput.type = 'number';
    thresholdInput.step = '0.05';
    thresholdInput.value = '0.6';
    thresholdInput.className = 'threshold';
    const promoteButton = el(doc, 'button', 'promote', 'promote');
    controls.appendChild(el(doc, 'label', '', 'min samples'));
    controls.appendChild(minSamplesInput);
    controls.appendChild(el(doc, 'label', '', 'threshold'));
    controls.appendChild(thresholdInput);
    controls.appendChild(promoteButton);
    dashboard.appendChild(promptTable);
    dashboard.appendChild(controls);
    dashboard.appendChild(promptStatus);
    dashboard.appendChild(promptError);

    const overlay = el(doc, 'div', 'token-overlay hidden');
    const tokenInput = el(doc, 'input') as HTMLInputElement;
    tokenInput.type = 'password';
    tokenInput.className = 'token-input';
    const tokenSave = el(doc, 'button', 'token-save', 'save token');
    overlay.appendChild(el(doc, 'p', '', 'review token required'));
    overlay.appendChild(tokenInput);
    overlay.appendChild(tokenSave);

    root.appendChild(header);
    root.appendChild(statsPanel);
    root.appendChild(banner);
    root.appendChild(card);
    root.appendChild(emptyNote);
    root.appendChild(hints);
    root.appendChild(dashboard);
    root.appendChild(overlay);

    // --- rendering ---

    function showBanner(text: string, kind: 'conflict' | 'error' | 'info'): void {
        banner.textContent = text;
        banner.className = `banner ${kind}`;
    }

    function clearBanner(): void {
        banner.className = 'banner hidden';
        banner.textContent = '';
    }

    function renderStats(stats: TriageStats): void {
        const o = stats.overall;
        overallLine.textContent =
            `${o.accepted} accepted / ${o.rejected} rejected / ` +
            `${o.pending} pending of ${o.generated} generated ` +
            `(irrelevance ${pct(o.irrelevance_rate)})`;
        labelBars.innerHTML = '';
        for (const label of Object.keys(stats.per_label).sort()) {
            const s = stats.per_label[label];
            const row = el(doc, 'div', 'label-row');
            row.setAttribute('data-label', label);
            const reviewed = s.accepted + s.rejected;
            const fill = el(doc, 'div', 'bar-fill');
            const share = s.generated > 0 ? reviewed / s.generated : 0;
            fill.style.width = `${Math.round(share * 100)}%`;
            const bar = el(doc, 'div', 'bar');
            bar.appendChild(fill);
            row.appendChild(el(doc, 'span', 'label-name', label));
            row.appendChild(bar);
            const counts = el(doc, 'span', 'label-counts',
                              `${s.accepted}/${s.rejected}/${s.pending}`);
            counts.setAttribute('data-accepted', String(s.accepted));
            counts.setAttribute('data-rejected', String(s.rejected));
            counts.setAttribute('data-pending', String(s.pending));
            row.appendChild(counts);
            row.appendChild(el(doc, 'span', 'label-irr',
                               pct(s.irrelevance_rate)));
            labelBars.appendChild(row);
        }
        refreshPromptTallies(stats);
    }

    function refreshPromptTallies(stats: TriageStats): void {
        // The stats payload carries every tally the table needs; only the
        // prompt text has to come from /api/prompts, fetched once at boot.
        promptRows = Object.keys(stats.per_prompt).map((id) => {
            const t = stats.per_prompt[id];
            return {
                id,
                material: t.material,
                text: promptTexts.get(id) ?? '',
                generated: t.generated,
                accepted: t.accepted,
                rejected: t.rejected,
                batting_average: t.batting_average,
                promoted: t.promoted,
            };
        });
        renderPromptTable();
    }

    function sortedRows(): PromptRow[] {
        const rows = promptRows.slice();
        rows.sort((a, b) => {
            let cmp: number;
            if (sortKey === 'id') {
                cmp = a.id < b.id ? -1 : a.id > b.id ? 1 : 0;
            } else {
                const av = a[sortKey] ?? -1;
                const bv = b[sortKey] ?? -1;
                cmp = av - bv;
            }
            if (cmp === 0) {
                cmp = a.id < b.id ? -1 : 1;
            }
            return sortAsc ? cmp : -cmp;
        });
        return rows;
    }

    function renderPromptTable(): void {
        promptTable.innerHTML = '';
        const head = el(doc, 'tr');
        const columns: Array<[string, SortKey | null]> = [
            ['prompt', 'id'], ['material', null], ['text', null],
            ['gen', 'generated'], ['acc', 'accepted'], ['rej', null],
            ['avg', 'batting_average'], ['', null],
        ];
        for (const [title, key] of columns) {
            const th = el(doc, 'th', '', title);
            if (key !== null) {
                th.classList.add('sortable');
                th.addEventListener('click', () => {
                    if (sortKey === key) {
                        sortAsc = !sortAsc;
                    } else {
                        sortKey = key;
                        sortAsc = false;
                    }
                    renderPromptTable();
                });
            }
            head.appendChild(th);
        }
        promptTable.appendChild(head);
        const rows = sortedRows();
        if (rows.length === 0) {
            const tr = el(doc, 'tr', 'empty-state');
            const td = el(doc, 'td', '', 'no prompts yet');
            td.colSpan = columns.length;
            tr.appendChild(td);
            promptTable.appendChild(tr);
            return;
        }
        for (const row of rows) {
            const tr = el(doc, 'tr', row.promoted ? 'prompt-row promoted'
                                                  : 'prompt-row');
            tr.setAttribute('data-prompt-id', row.id);
            tr.appendChild(el(doc, 'td', 'prompt-id', row.id));
            tr.appendChild(el(doc, 'td', '', row.material));
            tr.appendChild(el(doc, 'td', 'prompt-text', row.text));
            tr.appendChild(el(doc, 'td', '', String(row.generated)));
            tr.appendChild(el(doc, 'td', '', String(row.accepted)));
            tr.appendChild(el(doc, 'td', '', String(row.rejected)));
            const avg = el(doc, 'td', 'avg', avgText(row.batting_average));
            avg.setAttribute('data-avg',
                             String(row.batting_average ?? ''));
            tr.appendChild(avg);
            tr.appendChild(el(doc, 'td', 'badge',
                              row.promoted ? '★ promoted' : ''));
            promptTable.appendChild(tr);
        }
    }

    function renderCard(): void {
        if (current === null) {
            image.removeAttribute('src');
            image.removeAttribute('data-image-id');
            image.removeAttribute('data-label');
            caption.textContent = '';
            card.classList.add('hidden');
            emptyNote.classList.remove('hidden');
            return;
        }
        card.classList.remove('hidden');
        emptyNote.classList.add('hidden');
        image.setAttribute('src', client.imageUrl(current.id));
        image.setAttribute('data-image-id', current.id);
        image.setAttribute('data-label', current.label);
        caption.textContent =
            `${current.label} · ${current.id}` +
            (current.prompt_id ? ` · ${current.prompt_id}` : '') +
            (current.city ? ` · ${current.city}` : '');
    }

    function prefetch(records: QueueRecord[]): void {
        if (typeof Image === 'undefined') {
            return;
        }
        for (const rec of records) {
            new Image().src = client.imageUrl(rec.id);
        }
    }

    // --- flows ---

    async function advance(): Promise<void> {
        current = await session.next();
        renderCard();
        if (current !== null) {
            prefetch(await session.peek(2));
        }
    }

    async function decide(verdict: Verdict): Promise<void> {
        if (current === null) {
            return;
        }
        const record = current;
        if (session.recordDecision(record.id, verdict) === null) {
            showBanner(
                `this session already ${session.priorVerdict(record.id)} ` +
                `${record.id}; not sending a conflicting verdict`, 'error');
            return;
        }
        const outcome = await client.submitReview(record.id, verdict, reviewer);
        switch (outcome.kind) {
            case 'ok':
                clearBanner();
                renderStats(outcome.stats);
                await advance();
                break;
            case 'conflict':
                showBanner(`already reviewed: ${outcome.detail}`, 'conflict');
                session.skip(record.id);
                renderStats(await client.stats());
                await advance();
                break;
            case 'unauthorized':
                pendingDecision = { record, verdict };
                overlay.className = 'token-overlay';
                tokenInput.focus();
                break;
            case 'failed':
                showBanner(`review failed, still on this image: ` +
                           outcome.detail, 'error');
                renderCard();
                break;
        }
    }

    async function skip(): Promise<void> {
        if (current === null) {
            return;
        }
        clearBanner();
        session.skip(current.id);
        await advance();
    }

    async function saveToken(): Promise<void> {
        client.token = tokenInput.value;
        overlay.className = 'token-overlay hidden';
        try {
            doc.defaultView?.localStorage.setItem('triage-token', client.token);
        } catch {
            // storage may be unavailable; the session keeps working
        }
        if (pendingDecision !== null && current !== null &&
                pendingDecision.record.id === current.id) {
            const verdict = pendingDecision.verdict;
            pendingDecision = null;
            await decide(verdict);
        } else {
            pendingDecision = null;
        }
    }

    function onKey(event: KeyboardEvent): void {
        if (overlay.className === 'token-overlay') {
            if (event.key === 'Enter') {
                void track(saveToken());
            }
            return;
        }
        if (handlingKey) {
            return;
        }
        const key = event.key.toLowerCase();
        let flow: Promise<void> | null = null;
        if (key === 'a') {
            flow = decide('accepted');
        } else if (key === 'r') {
            flow = decide('rejected');
        } else if (key === 's') {
            flow = skip();
        }
        if (flow !== null) {
            handlingKey = true;
            void track(flow.finally(() => {
                handlingKey = false;
            }));
        }
    }

    doc.addEventListener('keydown', onKey);
    promoteButton.addEventListener('click', () => {
        void track((async () => {
            promptError.className = 'prompt-error hidden';
            promptStatus.textContent = '';
            const minSamples = parseInt(minSamplesInput.value, 10);
            const threshold = parseFloat(thresholdInput.value);
            const outcome = await client.promote(minSamples, threshold);
            if (outcome.kind === 'ok') {
                for (const row of outcome.prompts) {
                    promptTexts.set(row.id, row.text);
                }
                promptRows = outcome.prompts;
                renderPromptTable();
                promptStatus.textContent =
                    `promoted ${outcome.promoted.length} prompts`;
            } else {
                const detail = outcome.kind === 'unauthorized'
                    ? 'unauthorized: check the review token'
                    : outcome.detail;
                promptError.textContent = detail;
                promptError.className = 'prompt-error';
            }
        })());
    });
    tokenSave.addEventListener('click', () => {
        void track(saveToken());
    });

    async function boot(): Promise<void> {
        const rows = await client.prompts();
        promptTexts = new Map(rows.map((r) => [r.id, r.text]));
        renderStats(await client.stats());
        await advance();
    }

    void track(boot());

    return {
        root,
        client,
        idle(): Promise<void> {
            if (busy === 0) {
                return Promise.resolve();
            }
            return new Promise((resolve) => waiters.push(resolve));
        },
        dispose(): void {
            doc.removeEventListener('keydown', onKey);
            root.innerHTML = '';
        },
    };
}

// Served by the triage service itself: boot against the same origin.
const mount = typeof document !== 'undefined'
    ? document.getElementById('app') : null;
if (mount) {
    let token = '';
    let reviewer = 'browser';
    try {
        token = window.localStorage.getItem('triage-token') ?? '';
        reviewer = window.localStorage.getItem('triage-reviewer') ?? 'browser';
    } catch {
        // private mode; the token overlay will ask instead
    }
    createApp(mount, new TriageClient('', token), reviewer);
}
