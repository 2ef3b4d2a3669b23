import type { ApiClient } from "../api.js";
import { el, notice } from "../dom.js";

/** Vocabulary screen: canonical tags with their morphological variants. */
export class VocabularyView {
  constructor(private readonly api: ApiClient) {}

  async show(outlet: HTMLElement): Promise<void> {
    const vocab = await this.api.vocabulary();
    if (vocab.groups.length === 0) {
      outlet.replaceChildren(
        el("section", { class: "vocabulary" }, [
          el("h2", {}, ["vocabulary"]),
          notice("no morphological groups in this workspace"),
        ]),
      );
      return;
    }
    const rows = vocab.groups.map((group) =>
      el("tr", { "data-canonical": group.canonical }, [
        el("td", {}, [group.canonical]),
        el("td", {}, [group.variants.join(", ")]),
        el("td", {}, [[...new Set(Object.values(group.kinds))].sort().join(", ")]),
      ]),
    );
    outlet.replaceChildren(
      el("section", { class: "vocabulary" }, [
        el("h2", {}, ["vocabulary"]),
        el("table", { id: "morph-groups" }, [
          el("thead", {}, [
            el("tr", {}, [
              el("th", {}, ["canonical"]),
              el("th", {}, ["variants"]),
              el("th", {}, ["kinds"]),
            ]),
          ]),
          el("tbody", {}, rows),
        ]),
      ]),
    );
  }
}
