import { ServiceUnreachableError, type ApiClient } from "./api.js";
import { el, notice } from "./dom.js";
import { DetailView } from "./views/detail.js";
import { GalleryView } from "./views/gallery.js";
import { VocabularyView } from "./views/vocabulary.js";

/**
 * Hash-routed shell. Renders are serialized through a promise chain so a
 * navigation never races an in-flight one, and any screen failing with an
 * unreachable service raises the retry banner instead of going blank.
 */
export class App {
  readonly outlet: HTMLElement;
  private readonly banner: HTMLElement;
  private readonly gallery: GalleryView;
  private readonly detail: DetailView;
  private readonly vocabulary: VocabularyView;
  private chain: Promise<void> = Promise.resolve();

  constructor(root: HTMLElement, api: ApiClient) {
    this.banner = el("div", { id: "service-banner", class: "banner", hidden: "" });
    const nav = el("nav", {}, [
      this.navLink("#/", "designs"),
      this.navLink("#/vocabulary", "vocabulary"),
    ]);
    this.outlet = el("main", { id: "outlet" });
    root.replaceChildren(this.banner, nav, this.outlet);

    this.gallery = new GalleryView(api, (id) => {
      void this.navigate(`#/design/${encodeURIComponent(id)}`);
    });
    this.detail = new DetailView(api);
    this.vocabulary = new VocabularyView(api);
    window.addEventListener("hashchange", () => void this.render());
  }

  start(): Promise<void> {
    return this.render();
  }

  navigate(hash: string): Promise<void> {
    // pushState avoids the hashchange event, so this render is the only one.
    window.history.pushState(null, "", hash);
    return this.render();
  }

  render(): Promise<void> {
    this.chain = this.chain.then(() => this.route());
    return this.chain;
  }

  private async route(): Promise<void> {
    const hash = window.location.hash || "#/";
    try {
      const designMatch = /^#\/design\/(.+)$/.exec(hash);
      if (designMatch) {
        await this.detail.show(this.outlet, decodeURIComponent(designMatch[1]));
      } else if (hash === "#/vocabulary") {
        await this.vocabulary.show(this.outlet);
      } else {
        await this.gallery.show(this.outlet);
      }
      this.hideBanner();
    } catch (err) {
      if (err instanceof ServiceUnreachableError) {
        this.showBanner();
        return;
      }
      this.outlet.replaceChildren(
        notice(err instanceof Error ? err.message : String(err), "error"),
      );
    }
  }

  private navLink(hash: string, label: string): HTMLAnchorElement {
    const link = el("a", { href: hash }, [label]);
    link.addEventListener("click", (event) => {
      event.preventDefault();
      void this.navigate(hash);
    });
    return link;
  }

  private showBanner(): void {
    const retry = el("button", { id: "retry", type: "button" }, ["retry"]);
    retry.addEventListener("click", () => void this.render());
    this.banner.replaceChildren("tag service unreachable", retry);
    this.banner.removeAttribute("hidden");
  }

  private hideBanner(): void {
    this.banner.replaceChildren();
    this.banner.setAttribute("hidden", "");
  }
}
