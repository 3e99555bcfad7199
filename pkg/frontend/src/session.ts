/**
 * Decides which image to show next.
 *
 * The service always serves the oldest pending record per label, so a
 * skipped image would come straight back on the next fetch. The session
 * remembers skipped ids and walks the label rotation until it finds a
 * queue head the reviewer has not pushed away; once every head is skipped
 * the set is cleared and the rotation starts over. Decisions are recorded
 * so one session can never send two conflicting verdicts for an image.
 */

import { QueueRecord, TriageClient, Verdict } from './api.js';

export class ReviewSession {
    private skipped = new Set<string>();
    private decided = new Map<string, Verdict>();
    private rotation: string[] = [];
    private cursor = 0;

    constructor(private client: TriageClient) {}

    skip(imageId: string): void {
        this.skipped.add(imageId);
    }

    /** Null means the verdict conflicts with one already sent this session. */
    recordDecision(imageId: string, verdict: Verdict): Verdict | null {
        const prior = this.decided.get(imageId);
        if (prior !== undefined && prior !== verdict) {
            return null;
        }
        this.decided.set(imageId, verdict);
        return verdict;
    }

    priorVerdict(imageId: string): Verdict | undefined {
        return this.decided.get(imageId);
    }

    private async refreshRotation(): Promise<void> {
        const stats = await this.client.stats();
        const labels = Object.keys(stats.per_label)
            .filter((label) => stats.per_label[label].pending > 0)
            .sort();
        const current = this.rotation[this.cursor];
        this.rotation = labels;
        const kept = current ? labels.indexOf(current) : -1;
        this.cursor = kept >= 0 ? kept : 0;
    }

    async next(): Promise<QueueRecord | null> {
        await this.refreshRotation();
        if (this.rotation.length === 0) {
            return null;
        }
        for (let pass = 0; pass < 2; pass++) {
            for (let i = 0; i < this.rotation.length; i++) {
                const at = (this.cursor + i) % this.rotation.length;
                const head = await this.client.nextPending(this.rotation[at]);
                if (head !== null && !this.skipped.has(head.id)) {
                    this.cursor = at;
                    return head;
                }
            }
            // Every queue head is skipped; let them come around again.
            if (this.skipped.size === 0) {
                break;
            }
            this.skipped.clear();
        }
        return null;
    }

    /** Upcoming queue heads from the other labels, for image prefetch. */
    async peek(count: number): Promise<QueueRecord[]> {
        const ahead: QueueRecord[] = [];
        for (let i = 1; i < this.rotation.length && ahead.length < count; i++) {
            const at = (this.cursor + i) % this.rotation.length;
            const head = await this.client.nextPending(this.rotation[at]);
            if (head !== null && !this.skipped.has(head.id)) {
                ahead.push(head);
            }
        }
        return ahead;
    }
}
