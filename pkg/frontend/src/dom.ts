type Child = Node | string;

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: Child[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") {
      node.className = value;
    } else {
      node.setAttribute(key, value);
    }
  }
  node.append(...children);
  return node;
}

export function badge(origin: string): HTMLSpanElement {
  return el("span", { class: `badge badge-${origin}`, "data-origin": origin }, [origin]);
}

export function notice(text: string, kind: "info" | "error" = "info"): HTMLDivElement {
  return el("div", { class: `notice notice-${kind}`, role: "status" }, [text]);
}
