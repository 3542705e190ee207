/** Browser debug client: connects to ws://host:port/ws, renders frame and
 *  mask side by side, steps the paused world per keypress and exposes a
 *  bug toggle panel built from list_bugs. */

import { decodeMessage, encodeMessage, splitObsPayload } from "./protocol.js";
import { InputTracker } from "./input.js";

interface BugEntry {
  name: string;
  tag: number;
  enabled: boolean;
  color: number[];
}

const $ = (id: string) => document.getElementById(id)!;

class ViewerApp {
  private ws: WebSocket | null = null;
  private input = new InputTracker();
  private bugs: BugEntry[] = [];
  private auto = false;
  private connected = false;
  private width = 128;
  private height = 128;
  private reconnectDelay = 1000;

  start(): void {
    this.connect();
    window.addEventListener("keydown", (e) => {
      if ((e.target as HTMLElement).tagName === "INPUT") return;
      this.input.keyDown(e.code, performance.now());
      e.preventDefault();
    });
    window.addEventListener("keyup", (e) => this.input.keyUp(e.code));
    ($("env-select") as HTMLSelectElement).addEventListener("change", () =>
      this.makeEnv(),
    );
    $("reset-btn").addEventListener("click", () => this.resetEnv());
    ($("auto-toggle") as HTMLInputElement).addEventListener("change", (e) => {
      this.auto = (e.target as HTMLInputElement).checked;
      if (this.auto) this.requestAuto();
    });
    const pump = () => {
      if (this.connected && !this.auto) {
        const action = this.input.next(performance.now());
        if (action !== null) {
          this.send({ cmd: "step", action });
        }
      }
      requestAnimationFrame(pump);
    };
    requestAnimationFrame(pump);
  }

  private connect(): void {
    const url = `ws://${location.host}/ws`;
    this.ws = new WebSocket(url);
    this.ws.binaryType = "arraybuffer";
    this.ws.onopen = () => {
      this.connected = true;
      this.reconnectDelay = 1000;
      this.banner("");
      this.send({ cmd: "spec" });
      this.makeEnv();
    };
    this.ws.onclose = () => {
      this.connected = false;
      this.input.stepDone();
      this.banner("connection lost - reconnecting...");
      setTimeout(() => this.connect(), this.reconnectDelay);
      this.reconnectDelay = Math.min(this.reconnectDelay * 2, 10000);
    };
    this.ws.onmessage = (ev) => {
      try {
        this.handleMessage(new Uint8Array(ev.data as ArrayBuffer));
      } catch (e) {
        this.banner(`protocol error: ${e}`);
      }
    };
  }

  private send(header: Record<string, unknown>): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      // the encoded view spans its whole (freshly allocated) buffer
      this.ws.send(encodeMessage(header).buffer as ArrayBuffer);
    }
  }

  private makeEnv(): void {
    const envId = ($("env-select") as HTMLSelectElement).value;
    this.send({ cmd: "make", env_id: envId });
    this.resetEnv();
    this.send({ cmd: "list_bugs" });
  }

  private resetEnv(): void {
    const seed = parseInt(($("seed-input") as HTMLInputElement).value) || 0;
    this.send({ cmd: "reset", seed });
  }

  private requestAuto(): void {
    if (this.auto && this.connected) {
      this.send({ cmd: "auto_step", n: 30 });
    }
  }

  private handleMessage(data: Uint8Array): void {
    const { header, payload } = decodeMessage(data);
    switch (header.type) {
      case "obs":
        this.width = header.w as number;
        this.height = header.h as number;
        this.drawObs(payload);
        this.showState(header.state as number[], header.info as object);
        this.input.stepDone();
        break;
      case "spec": {
        const envs = header.envs as string[];
        const sel = $("env-select") as HTMLSelectElement;
        if (sel.options.length === 0) {
          for (const id of envs) {
            const opt = document.createElement("option");
            opt.value = id;
            opt.textContent = id;
            sel.appendChild(opt);
          }
        }
        break;
      }
      case "bugs":
        this.bugs = header.bugs as BugEntry[];
        this.renderBugPanel();
        break;
      case "ok":
        this.input.stepDone();
        if (this.auto) this.requestAuto();
        break;
      case "error":
        this.banner(`server error: ${header.code} ${header.detail ?? ""}`);
        this.input.stepDone();
        break;
    }
  }

  private drawObs(payload: Uint8Array): void {
    const { frame, mask } = splitObsPayload(payload, this.width, this.height);
    this.blit($("frame-canvas") as HTMLCanvasElement, frame);
    this.blit($("mask-canvas") as HTMLCanvasElement, mask);
  }

  private blit(canvas: HTMLCanvasElement, pixels: Uint8Array): void {
    canvas.width = this.width;
    canvas.height = this.height;
    const ctx = canvas.getContext("2d")!;
    ctx.imageSmoothingEnabled = false; // nearest-neighbor upscale via CSS
    const img = ctx.createImageData(this.width, this.height);
    for (let i = 0, j = 0; i < pixels.length; i += 3, j += 4) {
      img.data[j] = pixels[i];
      img.data[j + 1] = pixels[i + 1];
      img.data[j + 2] = pixels[i + 2];
      img.data[j + 3] = 255;
    }
    ctx.putImageData(img, 0, 0);
  }

  private showState(state: number[], info: object): void {
    const names = ["x", "y", "z", "yaw", "pitch", "vvel", "grounded"];
    $("state-view").textContent = state
      .map((v, i) => `${names[i]}=${v.toFixed(2)}`)
      .join("  ");
    $("info-view").textContent = JSON.stringify(info);
  }

  private renderBugPanel(): void {
    const panel = $("bug-panel");
    panel.innerHTML = "";
    for (const bug of this.bugs) {
      const row = document.createElement("label");
      row.className = "bug-row";
      const box = document.createElement("input");
      box.type = "checkbox";
      box.checked = bug.enabled;
      box.addEventListener("change", () => {
        const paramsText = (
          $("bug-params") as HTMLTextAreaElement
        ).value.trim();
        let params: unknown = undefined;
        if (paramsText) {
          try {
            params = JSON.parse(paramsText);
          } catch {
            this.banner("bad params JSON; ignored");
          }
        }
        const msg: Record<string, unknown> = {
          cmd: "set_bug",
          name: bug.name,
          enabled: box.checked,
        };
        if (params !== undefined) msg.params = params;
        this.send(msg);
        this.send({ cmd: "list_bugs" });
      });
      const swatch = document.createElement("span");
      swatch.className = "swatch";
      swatch.style.backgroundColor = `rgb(${bug.color.join(",")})`;
      row.appendChild(box);
      row.appendChild(swatch);
      row.appendChild(document.createTextNode(bug.name));
      panel.appendChild(row);
    }
  }

  private banner(text: string): void {
    const el = $("banner");
    el.textContent = text;
    el.style.display = text ? "block" : "none";
  }
}

new ViewerApp().start();
