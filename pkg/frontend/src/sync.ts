/**
 * Incremental sync for one deliberation via `GET /events?since=seq`
 * polling. Lazy consensus has no real-time requirement, so a simple
 * cursor poll is enough; the poller never mutates anything.
 */
import type { ApiClient, DomainEventView } from "./api.js";

export class EventPoller {
  private cursor = 0;
  private readonly events: DomainEventView[] = [];

  constructor(
    private readonly api: ApiClient,
    private readonly deliberationId: string,
  ) {}

  get seenSeq(): number {
    return this.cursor;
  }

  get log(): readonly DomainEventView[] {
    return this.events;
  }

  /**
   * Fetch everything past the cursor and append it. Returns the newly
   * seen events. Sequence numbers must continue contiguously from the
   * cursor; a gap means the client state is unusable and must be
   * rebuilt from scratch.
   */
  async poll(): Promise<DomainEventView[]> {
    const page = await this.api.getEvents(this.deliberationId, this.cursor);
    let expected = this.cursor + 1;
    for (const event of page.events) {
      if (event.seq !== expected) {
        throw new Error(
          `event gap: expected seq ${expected}, got ${event.seq}`,
        );
      }
      expected += 1;
    }
    this.events.push(...page.events);
    if (page.events.length > 0) {
      this.cursor = page.events[page.events.length - 1]!.seq;
    }
    return page.events;
  }
}
