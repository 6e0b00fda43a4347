import { filterClasses } from "./state.js";
import type { Item } from "./types.js";

/**
 * Correction dialog: searchable class picker (plus free-text entry when the
 * session runs in open-class mode). Resolves to the chosen label, or null on
 * cancel (no request is sent on cancel).
 */
export class CorrectionDialog {
  constructor(private overlay: HTMLElement) {}

  open(item: Item, classNames: string[], openClass: boolean): Promise<string | null> {
    return new Promise((resolve) => {
      this.overlay.replaceChildren();
      this.overlay.classList.add("visible");

      const box = document.createElement("div");
      box.className = "dialog";

      const title = document.createElement("h3");
      title.textContent = `Correct ${item.id}`;
      box.appendChild(title);

      const current = document.createElement("p");
      current.textContent = `current prediction: ${item.prediction.class_name}`;
      box.appendChild(current);

      const search = document.createElement("input");
      search.type = "text";
      search.placeholder = openClass
        ? "search classes or type a new label"
        : "search classes";
      box.appendChild(search);

      const list = document.createElement("ul");
      list.className = "class-list";
      box.appendChild(list);

      const done = (value: string | null) => {
        this.overlay.classList.remove("visible");
        this.overlay.replaceChildren();
        resolve(value);
      };

      const renderList = () => {
        list.replaceChildren();
        for (const name of filterClasses(classNames, search.value)) {
          const li = document.createElement("li");
          const btn = document.createElement("button");
          btn.textContent = name;
          btn.addEventListener("click", () => done(name));
          li.appendChild(btn);
          list.appendChild(li);
        }
        if (openClass && search.value.trim() && !classNames.includes(search.value.trim())) {
          const li = document.createElement("li");
          const btn = document.createElement("button");
          btn.className = "new-class";
          btn.textContent = `teach new class "${search.value.trim()}"`;
          btn.addEventListener("click", () => done(search.value.trim()));
          li.appendChild(btn);
          list.appendChild(li);
        }
      };
      search.addEventListener("input", renderList);
      renderList();

      const cancel = document.createElement("button");
      cancel.className = "cancel";
      cancel.textContent = "cancel";
      cancel.addEventListener("click", () => done(null));
      box.appendChild(cancel);

      this.overlay.appendChild(box);
      search.focus();
    });
  }
}
