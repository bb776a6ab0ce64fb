/** Right-hand panel: options, progress, statistics, capacity parameters. */

import { ApiClient, ComputeOptions } from "./api.js";
import {
  CapacityParams,
  DEFAULT_PARAMS,
  FIELD_HELP,
  formatReport,
  toRequestBody,
  validateParams,
} from "./params.js";

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K, className?: string, text?: string): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function helpIcon(text: string): HTMLElement {
  const icon = el("span", "help", "?");
  icon.title = text;
  return icon;
}

function numberField(labelText: string, value: number, help: string,
                     onChange: (v: number) => void): HTMLElement {
  const wrap = el("label", "field");
  wrap.append(el("span", "field-label", labelText), helpIcon(help));
  const input = el("input");
  input.type = "number";
  input.step = "any";
  input.value = String(value);
  input.addEventListener("input", () => onChange(Number(input.value)));
  wrap.append(input);
  return wrap;
}

export class Panel {
  readonly root: HTMLElement;
  private progressBar: HTMLProgressElement;
  private progressLabel: HTMLElement;
  private statsBox: HTMLElement;
  private errorBox: HTMLElement;
  private resultsBox: HTMLElement;
  private cfList: HTMLElement;
  private paramsBox: HTMLElement;
  private params: CapacityParams;
  private walkableAreaM2: number | null = null;
  private capacityTimer: number | undefined;

  constructor(private api: ApiClient, private options: ComputeOptions,
              private onCalculate: () => void, container: HTMLElement) {
    this.params = structuredClone(DEFAULT_PARAMS);
    this.root = container;
    this.errorBox = el("div", "error-box");
    this.statsBox = el("div", "stats-box");
    this.resultsBox = el("div", "results-box");
    this.progressBar = el("progress");
    this.progressBar.max = 1;
    this.progressBar.value = 0;
    this.progressLabel = el("span", "progress-label", "");
    this.cfList = el("div", "cf-list");
    this.paramsBox = el("div", "params-box");
    this.build();
  }

  private build(): void {
    const options = el("fieldset", "options-box");
    options.append(el("legend", undefined, "Options"));
    options.append(
      this.optionRow("Remove inner areas within buildings",
                     "Courtyards and lightwells inside buildings usually " +
                     "have no public access; keep this on to exclude them.",
                     this.options.remove_building_inner_areas,
                     (v) => { this.options.remove_building_inner_areas = v; }),
      this.optionRow("Classify roads as walkable",
                     "For special events (marathons, street fairs) where " +
                     "roads are closed to traffic.",
                     this.options.roads_walkable,
                     (v) => { this.options.roads_walkable = v; }),
      this.optionRow("Classify grass as not walkable",
                     "Excludes lawns and other vegetation that must not be " +
                     "stepped on.",
                     this.options.grass_not_walkable,
                     (v) => { this.options.grass_not_walkable = v; }),
    );

    const calculate = el("button", "calculate", "Calculate carrying capacity");
    calculate.addEventListener("click", () => this.onCalculate());

    const progressRow = el("div", "progress-row");
    progressRow.append(this.progressBar, this.progressLabel);

    this.buildParams();

    this.root.append(options, calculate, progressRow, this.errorBox,
                     this.statsBox, this.paramsBox, this.resultsBox);
  }

  private optionRow(labelText: string, help: string, initial: boolean,
                    onChange: (v: boolean) => void): HTMLElement {
    const row = el("label", "option-row");
    const box = el("input");
    box.type = "checkbox";
    box.checked = initial;
    box.addEventListener("change", () => onChange(box.checked));
    row.append(box, el("span", undefined, labelText), helpIcon(help));
    return row;
  }

  private buildParams(): void {
    this.paramsBox.replaceChildren();
    this.paramsBox.append(el("h3", undefined, "Carrying capacity parameters"));
    this.paramsBox.append(
      numberField("Area per pedestrian (m²)", this.params.areaPerPedestrianM2,
                  FIELD_HELP.areaPerPedestrianM2,
                  (v) => { this.params.areaPerPedestrianM2 = v; this.scheduleCapacity(); }),
      numberField("Rotation factor (visits/day)", this.params.rotationFactor,
                  FIELD_HELP.rotationFactor,
                  (v) => { this.params.rotationFactor = v; this.scheduleCapacity(); }),
    );
    const cfHeader = el("div", "cf-header");
    cfHeader.append(el("span", "field-label", "Corrective factors"),
                    helpIcon(FIELD_HELP.correctiveFactors));
    const addButton = el("button", "add-cf", "+ add factor");
    addButton.addEventListener("click", () => {
      this.params.correctiveFactors.push({ label: "", value: 1.0 });
      this.renderCfRows();
      this.scheduleCapacity();
    });
    cfHeader.append(addButton);
    this.paramsBox.append(cfHeader, this.cfList);
    this.renderCfRows();
    this.paramsBox.append(
      numberField("Management capacity (0–1)", this.params.managementCapacity,
                  FIELD_HELP.managementCapacity,
                  (v) => { this.params.managementCapacity = v; this.scheduleCapacity(); }),
    );
  }

  private renderCfRows(): void {
    this.cfList.replaceChildren();
    this.params.correctiveFactors.forEach((cf, index) => {
      const row = el("div", "cf-row");
      const label = el("input");
      label.placeholder = "label";
      label.value = cf.label;
      label.addEventListener("input", () => {
        cf.label = label.value;
        this.scheduleCapacity();
      });
      const value = el("input");
      value.type = "number";
      value.step = "any";
      value.min = "0";
      value.max = "1";
      value.value = String(cf.value);
      value.addEventListener("input", () => {
        cf.value = Number(value.value);
        this.scheduleCapacity();
      });
      const remove = el("button", "remove-cf", "×");
      remove.addEventListener("click", () => {
        this.params.correctiveFactors.splice(index, 1);
        this.renderCfRows();
        this.scheduleCapacity();
      });
      row.append(label, value, remove);
      this.cfList.append(row);
    });
  }

  setProgress(fraction: number, label: string | null): void {
    this.progressBar.value = fraction;
    this.progressLabel.textContent =
      `${Math.round(fraction * 100)}%${label ? ` · ${label}` : ""}`;
  }

  showError(message: string): void {
    this.errorBox.textContent = message;
  }

  clearError(): void {
    this.errorBox.textContent = "";
  }

  showStats(walkableAreaM2: number, percent: number): void {
    this.walkableAreaM2 = walkableAreaM2;
    this.statsBox.replaceChildren(
      el("div", "stat",
         `Walkable area: ${walkableAreaM2.toLocaleString("en-US",
             { maximumFractionDigits: 1 })} m²`),
      el("div", "stat", `Share of selection: ${percent.toFixed(2)}%`),
    );
    this.scheduleCapacity();
  }

  private scheduleCapacity(): void {
    window.clearTimeout(this.capacityTimer);
    this.capacityTimer = window.setTimeout(() => {
      void this.updateCapacity();
    }, 250);
  }

  async updateCapacity(): Promise<void> {
    if (this.walkableAreaM2 === null) {
      return;
    }
    const problems = validateParams(this.params);
    if (problems.length > 0) {
      this.showError(problems[0].message);
      return;
    }
    this.clearError();
    try {
      const report = await this.api.capacity(
        toRequestBody(this.walkableAreaM2, this.params));
      const pretty = formatReport(report);
      this.resultsBox.replaceChildren(
        el("h3", undefined, "Carrying capacity (visitors/day)"),
        el("div", "capacity", `Physical (PCC): ${pretty.pcc}`),
        el("div", "capacity", `Real (RCC): ${pretty.rcc}`),
        el("div", "capacity", `Effective (ECC): ${pretty.ecc}`),
      );
    } catch (exc) {
      this.showError((exc as Error).message);
    }
  }
}
