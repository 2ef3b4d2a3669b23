import { ApiError, type ApiClient } from "../api.js";
import { badge, el, notice } from "../dom.js";
import type { DesignSummary, TagEntry, Vocabulary } from "../types.js";

/** Gallery and search screen: query box, category chips, result grid. */
export class GalleryView {
  private vocab: Vocabulary | null = null;
  private query = "";
  private category: string | null = null;
  private page = 1;

  private input!: HTMLInputElement;
  private chipsRow!: HTMLElement;
  private suggestionsRow!: HTMLElement;
  private resultsBox!: HTMLElement;

  constructor(
    private readonly api: ApiClient,
    private readonly openDesign: (id: string) => void,
  ) {}

  async show(outlet: HTMLElement): Promise<void> {
    if (!this.vocab) {
      this.vocab = await this.api.vocabulary();
    }
    outlet.replaceChildren(this.buildShell());
    this.renderChips();
    await this.refreshResults();
  }

  private buildShell(): HTMLElement {
    this.input = el("input", {
      id: "query",
      type: "text",
      placeholder: "tags joined by +",
      autocomplete: "off",
    });
    this.input.value = this.query;
    const form = el("form", { id: "search-form" }, [
      this.input,
      el("button", { type: "submit" }, ["search"]),
    ]);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      this.query = this.input.value;
      this.page = 1;
      void this.refreshResults();
    });

    this.chipsRow = el("div", { id: "category-chips", class: "chips" });
    this.suggestionsRow = el("div", { id: "suggestions", class: "chips" });
    this.resultsBox = el("div", { id: "results" });
    return el("section", { class: "gallery" }, [
      form,
      this.chipsRow,
      this.suggestionsRow,
      this.resultsBox,
    ]);
  }

  private renderChips(): void {
    if (!this.vocab) return;
    const chips = Object.keys(this.vocab.categories).map((name) => {
      const active = name === this.category;
      const chip = el(
        "button",
        {
          type: "button",
          class: active ? "chip chip-active" : "chip",
          "data-category": name,
        },
        [name],
      );
      chip.addEventListener("click", () => {
        this.category = active ? null : name;
        this.renderChips();
      });
      return chip;
    });
    this.chipsRow.replaceChildren(...chips);
    this.renderSuggestions();
  }

  private renderSuggestions(): void {
    if (!this.vocab || this.category === null) {
      this.suggestionsRow.replaceChildren();
      return;
    }
    const subcats = this.vocab.categories[this.category] ?? {};
    const tags = [...new Set(Object.values(subcats).flat())].sort();
    this.suggestionsRow.replaceChildren(
      ...tags.map((tag) => {
        const button = el("button", { type: "button", class: "suggestion", "data-tag": tag }, [
          tag,
        ]);
        button.addEventListener("click", () => {
          this.query = this.query ? `${this.query}+${tag}` : tag;
          this.input.value = this.query;
          this.page = 1;
          void this.refreshResults();
        });
        return button;
      }),
    );
  }

  private async refreshResults(): Promise<void> {
    const terms = this.query
      .split("+")
      .map((t) => t.trim())
      .filter(Boolean);
    this.resultsBox.replaceChildren(notice("loading..."));
    try {
      if (terms.length === 0) {
        await this.renderListing();
      } else {
        await this.renderSearch(terms);
      }
    } catch (err) {
      if (err instanceof ApiError) {
        this.resultsBox.replaceChildren(notice(err.message, "error"));
        return;
      }
      throw err;
    }
  }

  private async renderListing(): Promise<void> {
    const data = await this.api.listDesigns(this.page);
    const lastPage = Math.max(1, Math.ceil(data.total / data.page_size));
    const prev = el("button", { type: "button", id: "prev-page" }, ["prev"]);
    const next = el("button", { type: "button", id: "next-page" }, ["next"]);
    if (this.page <= 1) prev.setAttribute("disabled", "");
    if (this.page >= lastPage) next.setAttribute("disabled", "");
    prev.addEventListener("click", () => {
      this.page -= 1;
      void this.refreshResults();
    });
    next.addEventListener("click", () => {
      this.page += 1;
      void this.refreshResults();
    });
    const pager = el("div", { class: "pager" }, [
      prev,
      el("span", { id: "page-label" }, [`page ${data.page} of ${lastPage} (${data.total} designs)`]),
      next,
    ]);
    this.resultsBox.replaceChildren(
      pager,
      el("div", { class: "grid" }, data.designs.map((d) => this.card(d))),
    );
  }

  private async renderSearch(terms: string[]): Promise<void> {
    const found = await this.api.search(terms);
    const header = el("div", { id: "search-summary" }, [
      `${found.results.length} designs for ${found.query.join(" + ")}`,
    ]);
    this.resultsBox.replaceChildren(
      header,
      el("div", { class: "grid" }, found.results.map((d) => this.card(d, d.matches))),
    );
  }

  private card(summary: DesignSummary, matches?: TagEntry[]): HTMLElement {
    const card = el("a", {
      href: `#/design/${encodeURIComponent(summary.id)}`,
      class: "card",
      "data-id": summary.id,
    });
    card.addEventListener("click", (event) => {
      event.preventDefault();
      this.openDesign(summary.id);
    });
    card.append(
      el("img", {
        src: this.api.url(summary.image_url),
        alt: summary.title ?? summary.id,
        loading: "lazy",
      }),
      el("div", { class: "card-title" }, [summary.title ?? summary.id]),
    );
    if (matches) {
      card.append(
        el(
          "div",
          { class: "matches" },
          matches.map((m) => el("span", { class: "match" }, [m.tag, " ", badge(m.origin)])),
        ),
      );
    }
    card.append(
      el(
        "div",
        { class: "card-tags" },
        summary.tags.slice(0, 6).map((t) => el("span", { class: "tag" }, [t])),
      ),
    );
    return card;
  }
}
