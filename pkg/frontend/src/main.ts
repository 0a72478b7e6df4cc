// Browser entry point: renders each study step into #app and implements the
// participant ports over real DOM widgets. Forward-only by construction --
// screens are replaced as the server phase advances and nothing is kept
// across reloads except the session id in memory.

import { StudyApi } from "./api.js";
import { FlowEngine, type ParticipantPorts } from "./flow.js";
import { CARD_WIDTH_MM } from "./calibration.js";
import { playOnceInto } from "./player.js";
import { LIKERT_VALUES, type FormItem } from "./questionnaire.js";
import { ringSvg } from "./vision.js";
import type { Answer, Demographics, IshiharaPlate, LandoltRing } from "./types.js";

const app = document.getElementById("app")!;

function screen(title: string): HTMLDivElement {
  const div = document.createElement("div");
  div.className = "screen";
  const h = document.createElement("h2");
  h.textContent = title;
  div.appendChild(h);
  app.replaceChildren(div);
  return div;
}

function button(label: string, onClick: () => void): HTMLButtonElement {
  const b = document.createElement("button");
  b.textContent = label;
  b.addEventListener("click", onClick);
  return b;
}

const ports: ParticipantPorts = {
  collectDemographics() {
    return new Promise((resolve) => {
      const s = screen("Participation requirements");
      const form = document.createElement("form");
      form.innerHTML = `
        <label>Age <input name="age" type="number" min="18" max="99" required></label>
        <label>Gender
          <select name="gender">
            <option>female</option><option>male</option>
            <option>non-binary</option><option>prefer not to say</option>
          </select></label>
        <label><input name="license" type="checkbox"> I hold a valid driving license</label>
        <label>Years of driving <input name="years" type="number" min="0" max="80" value="0"></label>
        <label><input name="teleop" type="checkbox"> I have operated a vehicle remotely before</label>
        <label>Screen diagonal (inches) <input name="diag" type="number" min="10" max="100" step="0.1" required></label>
        <button type="submit">Continue</button>`;
      form.addEventListener("submit", (ev) => {
        ev.preventDefault();
        const data = new FormData(form);
        const demographics: Demographics = {
          age: Number(data.get("age")),
          gender: String(data.get("gender")),
          license: data.get("license") === "on",
          years_driving: Number(data.get("years")),
          teleop_experience: data.get("teleop") === "on",
        };
        resolve({ demographics, screenDiagonal: Number(data.get("diag")) });
      });
      s.appendChild(form);
    });
  },

  readMatchedWidthPx() {
    return new Promise((resolve) => {
      const s = screen("Screen calibration");
      const p = document.createElement("p");
      p.textContent =
        "Hold a bank card against the screen and resize the rectangle " +
        `until it exactly matches the card's width (${CARD_WIDTH_MM} mm).`;
      const rect = document.createElement("div");
      rect.style.cssText =
        "height:54px;background:#2563eb33;border:2px solid #2563eb;width:340px";
      const slider = document.createElement("input");
      slider.type = "range";
      slider.min = "40";
      slider.max = "1200";
      slider.value = "340";
      slider.addEventListener("input", () => {
        rect.style.width = `${slider.value}px`;
      });
      s.append(p, rect, slider, button("The rectangle matches my card", () => {
        resolve(Number(slider.value));
      }));
    });
  },

  answerLandolt(ring: LandoltRing, ppmm: number) {
    return new Promise((resolve) => {
      const s = screen(`Vision test: ring ${ring.index + 1}`);
      const holder = document.createElement("div");
      holder.innerHTML = ringSvg(ring, ppmm);
      holder.style.cssText = "background:white;padding:24px;display:inline-block";
      const p = document.createElement("p");
      p.textContent = "Where is the gap in the ring?";
      const grid = document.createElement("div");
      grid.className = "direction-grid";
      for (const dir of ["up_left", "up", "up_right", "left", "", "right", "down_left", "down", "down_right"]) {
        if (!dir) {
          grid.appendChild(document.createElement("span"));
          continue;
        }
        grid.appendChild(button(dir.replace("_", " "), () => resolve(dir)));
      }
      s.append(holder, p, grid);
    });
  },

  answerIshihara(plate: IshiharaPlate) {
    return new Promise((resolve) => {
      const s = screen("Color vision test");
      const img = document.createElement("img");
      img.src = `/media-static/${plate.image}`;
      img.alt = "color plate";
      img.width = 280;
      const p = document.createElement("p");
      p.textContent = "Which number do you see?";
      const row = document.createElement("div");
      for (const opt of plate.options) {
        row.appendChild(button(opt, () => resolve(opt)));
      }
      s.append(img, p, row);
    });
  },

  playOnce(url: string, videoWidthPx: number) {
    const s = screen("Watch carefully -- the video plays only once");
    return playOnceInto(s, url, videoWidthPx);
  },

  answerQuestionnaire(items: FormItem[], scenarioIndex: number, phase) {
    return new Promise((resolve) => {
      const title =
        phase === "initial"
          ? `Scenario ${scenarioIndex + 1}: your assessment`
          : `Scenario ${scenarioIndex + 1}: reflection after the original video`;
      const s = screen(title);
      const form = document.createElement("form");
      for (const item of items) {
        const row = document.createElement("fieldset");
        const legend = document.createElement("legend");
        legend.textContent = `${item.dimension.replace(/_/g, " ")}: ${item.itemId.replace(/_/g, " ")}`;
        row.appendChild(legend);
        for (const v of LIKERT_VALUES) {
          const lab = document.createElement("label");
          const radio = document.createElement("input");
          radio.type = "radio";
          radio.name = `${item.dimension}/${item.itemId}`;
          radio.value = String(v);
          radio.required = true;
          lab.append(radio, ` ${v}`);
          row.appendChild(lab);
        }
        form.appendChild(row);
      }
      form.appendChild(button("Submit", () => undefined));
      form.addEventListener("submit", (ev) => {
        ev.preventDefault();
        const answers: Answer[] = items.map((item) => {
          const checked = form.querySelector<HTMLInputElement>(
            `input[name="${item.dimension}/${item.itemId}"]:checked`,
          );
          return {
            dimension: item.dimension,
            item_id: item.itemId,
            value: Number(checked!.value),
          };
        });
        resolve(answers);
      });
      s.appendChild(form);
    });
  },

  answerObjectCheck(options: string[]) {
    return new Promise((resolve) => {
      const s = screen("Which of these did you observe in the scene?");
      const form = document.createElement("form");
      for (const opt of options) {
        const lab = document.createElement("label");
        const box = document.createElement("input");
        box.type = "checkbox";
        box.name = "objects";
        box.value = opt;
        lab.append(box, ` ${opt.replace(/_/g, " ")}`);
        form.appendChild(lab);
      }
      form.appendChild(button("Continue", () => undefined));
      form.addEventListener("submit", (ev) => {
        ev.preventDefault();
        const selected = [...form.querySelectorAll<HTMLInputElement>("input:checked")]
          .map((b) => b.value);
        resolve(selected);
      });
      s.appendChild(form);
    });
  },

  notify(kind: string, message: string) {
    const bar = document.createElement("p");
    bar.className = `notice notice-${kind}`;
    bar.textContent = message;
    app.prepend(bar);
    setTimeout(() => bar.remove(), 6000);
  },
};

async function start(): Promise<void> {
  const engine = new FlowEngine(new StudyApi(""), ports);
  const result = await engine.run();
  const s = screen(result.phase === "done" ? "Thank you!" : "Session ended");
  const p = document.createElement("p");
  p.textContent =
    result.phase === "done"
      ? "Your ratings were recorded. You can close this window."
      : `The session ended in state "${result.phase}".`;
  s.appendChild(p);
}

void start();
