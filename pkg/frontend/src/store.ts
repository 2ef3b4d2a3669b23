import type { ApiClient } from "./api.js";
import type { DesignDetail, Recommendation, TagEntry } from "./types.js";

export interface DetailState {
  design: DesignDetail | null;
  recommendations: Recommendation[];
  pending: string | null;
  error: string | null;
}

const EMPTY: DetailState = { design: null, recommendations: [], pending: null, error: null };

/**
 * Holds one design's detail plus its recommendations and runs accept/reject
 * with an optimistic local update. A successful request always ends in a
 * fresh fetch, so settled state never diverges from the server; a failed
 * request restores the exact prior state.
 */
export class CurationStore {
  state: DetailState = EMPTY;
  private readonly listeners = new Set<() => void>();

  constructor(private readonly api: ApiClient) {}

  subscribe(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => {
      this.listeners.delete(listener);
    };
  }

  async load(id: string): Promise<void> {
    const [design, recs] = await Promise.all([
      this.api.getDesign(id),
      this.api.recommendationsFor(id),
    ]);
    this.setState({
      design,
      recommendations: recs.recommendations,
      pending: null,
      error: null,
    });
  }

  accept(tag: string): Promise<void> {
    return this.curate(tag, "accepted");
  }

  reject(tag: string): Promise<void> {
    return this.curate(tag, "rejected");
  }

  private async curate(tag: string, origin: "accepted" | "rejected"): Promise<void> {
    const before = this.state;
    const design = before.design;
    if (!design || before.pending !== null) return;

    const score = before.recommendations.find((r) => r.tag === tag)?.score;
    const guess: TagEntry = score === undefined ? { tag, origin } : { tag, origin, score };
    const tags = [...design.tags.filter((t) => t.tag !== tag), guess].sort((a, b) =>
      a.tag.localeCompare(b.tag),
    );
    this.setState({
      design: { ...design, tags },
      recommendations: before.recommendations.filter((r) => r.tag !== tag),
      pending: tag,
      error: null,
    });

    try {
      if (origin === "accepted") {
        await this.api.accept(design.id, tag);
      } else {
        await this.api.reject(design.id, tag);
      }
      // Canonicalization and provenance live server-side; replace the guess
      // with the authoritative state instead of patching it up locally.
      await this.load(design.id);
    } catch (err) {
      this.setState({ ...before, error: err instanceof Error ? err.message : String(err) });
    }
  }

  private setState(next: DetailState): void {
    this.state = next;
    for (const listener of this.listeners) listener();
  }
}
