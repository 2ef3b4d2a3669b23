import { ApiError, type ApiClient } from "../api.js";
import { badge, el, notice } from "../dom.js";
import { CurationStore } from "../store.js";
import type { Explanation } from "../types.js";

interface ExplainState {
  tag: string;
  data: Explanation;
  opacity: number;
}

/**
 * Design detail screen: image, tags with provenance, recommendations with
 * accept/reject, and a per-recommendation saliency overlay.
 */
export class DetailView {
  readonly store: CurationStore;
  private outlet: HTMLElement | null = null;
  private id = "";
  private explain: ExplainState | null = null;
  private explainError: string | null = null;

  constructor(private readonly api: ApiClient) {
    this.store = new CurationStore(api);
    this.store.subscribe(() => this.render());
  }

  async show(outlet: HTMLElement, id: string): Promise<void> {
    this.outlet = outlet;
    if (this.id !== id) {
      this.explain = null;
      this.explainError = null;
    }
    this.id = id;
    try {
      await this.store.load(id);
    } catch (err) {
      if (err instanceof ApiError) {
        outlet.replaceChildren(notice(err.message, "error"));
        return;
      }
      throw err;
    }
  }

  private render(): void {
    if (!this.outlet) return;
    const { design, recommendations, pending, error } = this.store.state;
    if (!design || design.id !== this.id) return;

    const stack = el("div", { class: "image-stack" }, [
      el("img", {
        class: "design-image",
        src: this.api.url(design.image_url),
        alt: design.title ?? design.id,
      }),
    ]);
    let explainPanel: HTMLElement | null = null;
    if (this.explain) {
      const overlay = el("img", {
        class: "saliency-overlay",
        src: this.api.url(this.explain.data.saliency_png),
        alt: `saliency for ${this.explain.tag}`,
      });
      overlay.style.opacity = String(this.explain.opacity);
      stack.append(overlay);

      const slider = el("input", {
        id: "saliency-opacity",
        type: "range",
        min: "0",
        max: "1",
        step: "0.05",
      });
      slider.value = String(this.explain.opacity);
      slider.addEventListener("input", () => {
        if (!this.explain) return;
        this.explain.opacity = Number(slider.value);
        overlay.style.opacity = slider.value;
      });
      explainPanel = el("div", { class: "explain-panel" }, [
        el("label", { for: "saliency-opacity" }, [`saliency for ${this.explain.tag}`]),
        slider,
        el(
          "ol",
          { class: "top-tags" },
          this.explain.data.top_tags.map((t) =>
            el("li", { "data-tag": t.tag }, [`${t.tag} ${t.score.toFixed(3)}`]),
          ),
        ),
      ]);
    }

    const tagList = el(
      "ul",
      { class: "tag-list" },
      design.tags.map((entry) => {
        const item = el("li", { "data-tag": entry.tag }, [entry.tag, " ", badge(entry.origin)]);
        if (entry.score !== undefined) {
          item.append(" ", el("span", { class: "score" }, [entry.score.toFixed(3)]));
        }
        return item;
      }),
    );

    const recList = el(
      "ul",
      { class: "rec-list" },
      recommendations.map((rec) => {
        const accept = el("button", { type: "button", class: "accept" }, ["accept"]);
        const reject = el("button", { type: "button", class: "reject" }, ["reject"]);
        const explain = el("button", { type: "button", class: "explain-toggle" }, [
          this.explain?.tag === rec.tag ? "hide" : "explain",
        ]);
        if (pending !== null) {
          accept.setAttribute("disabled", "");
          reject.setAttribute("disabled", "");
        }
        accept.addEventListener("click", () => void this.store.accept(rec.tag));
        reject.addEventListener("click", () => void this.store.reject(rec.tag));
        explain.addEventListener("click", () => void this.toggleExplain(rec.tag));
        return el("li", { "data-tag": rec.tag }, [
          el("span", { class: "rec-tag" }, [rec.tag]),
          " ",
          el("span", { class: "score" }, [rec.score.toFixed(3)]),
          " ",
          accept,
          reject,
          explain,
        ]);
      }),
    );

    const sections = [
      el("h2", {}, [design.title ?? design.id]),
      stack,
      ...(explainPanel ? [explainPanel] : []),
      el("h3", {}, ["tags"]),
      tagList,
      el("h3", {}, ["recommended tags"]),
      recommendations.length ? recList : notice("no recommendations above threshold"),
    ];
    if (error) sections.push(notice(error, "error"));
    if (this.explainError) sections.push(notice(this.explainError, "error"));
    const section = el("section", { class: "detail", "data-id": design.id }, sections);
    if (pending !== null) section.setAttribute("data-pending", pending);
    this.outlet.replaceChildren(section);
  }

  private async toggleExplain(tag: string): Promise<void> {
    if (this.explain?.tag === tag) {
      this.explain = null;
      this.render();
      return;
    }
    try {
      const data = await this.api.explanationFor(this.id, tag);
      this.explain = { tag, data, opacity: 0.5 };
      this.explainError = null;
    } catch (err) {
      this.explainError = err instanceof Error ? err.message : String(err);
    }
    this.render();
  }
}
