import type { ApiClient, ItemFilter } from "./api.js";
import { glyphFor, pageCount } from "./state.js";
import type { Item } from "./types.js";

/**
 * Paged grid of item cards. Every card shows the server's current prediction
 * (the gallery never classifies anything itself); clicking a card hands it to
 * the correction dialog via the onSelect callback.
 */
export class Gallery {
  page = 1;
  pageSize = 48;
  filter: ItemFilter = "all";
  total = 0;
  onSelect: (item: Item) => void = () => {};
  private items: Item[] = [];

  constructor(
    private api: ApiClient,
    private grid: HTMLElement,
    private pageLabel: HTMLElement,
    private status: HTMLElement,
  ) {}

  pages(): number {
    return pageCount(this.total, this.pageSize);
  }

  async load(): Promise<void> {
    try {
      const page = await this.api.items(this.page, this.pageSize, this.filter);
      this.total = page.total;
      this.items = page.items;
      this.render();
      this.status.textContent = "";
    } catch (err) {
      this.status.textContent = String(err);
    }
  }

  async setFilter(filter: ItemFilter): Promise<void> {
    this.filter = filter;
    this.page = 1;
    await this.load();
  }

  async move(delta: number): Promise<void> {
    const next = this.page + delta;
    if (next < 1 || next > this.pages()) return;
    this.page = next;
    await this.load();
  }

  private render(): void {
    this.grid.replaceChildren();
    for (const item of this.items) {
      this.grid.appendChild(this.card(item));
    }
    this.pageLabel.textContent =
      this.total === 0 ? "no items" : `page ${this.page} / ${this.pages()} (${this.total} items)`;
  }

  private card(item: Item): HTMLElement {
    const card = document.createElement("button");
    card.className = "card" + (item.corrected ? " corrected" : "");
    card.dataset.itemId = item.id;

    const thumb = document.createElement("div");
    thumb.className = "thumb";
    if (item.image) {
      const img = document.createElement("img");
      img.src = item.image;
      img.alt = item.id;
      thumb.appendChild(img);
    } else {
      const glyph = glyphFor(item.embedding_prefix);
      thumb.style.background = glyph.color;
      thumb.textContent = glyph.char;
    }
    card.appendChild(thumb);

    const name = document.createElement("div");
    name.className = "pred";
    name.textContent = item.prediction.class_name;
    card.appendChild(name);

    const dist = document.createElement("div");
    dist.className = "dist";
    dist.textContent = `d = ${item.distance.toFixed(4)}`;
    card.appendChild(dist);

    if (item.label && item.label.class_name !== item.prediction.class_name) {
      const truth = document.createElement("div");
      truth.className = "truth";
      truth.textContent = `truth: ${item.label.class_name}`;
      card.appendChild(truth);
    }
    if (item.corrected) {
      const badge = document.createElement("div");
      badge.className = "badge";
      badge.textContent = "corrected";
      card.appendChild(badge);
    }

    card.addEventListener("click", () => this.onSelect(item));
    return card;
  }
}
