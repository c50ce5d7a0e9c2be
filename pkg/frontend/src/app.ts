/** Express wiring: POST /infer scores an image, GET /health reports state.
 *
 * The model loads asynchronously after the app is created; both routes
 * answer 503 until it is ready. Request bodies are raw image bytes with the
 * Content-Type distinguishing PPM from PNG. Unknown routes get a JSON 404.
 */

import express from "express";
import { PNG } from "pngjs";
import { CLASS_COUNT, MODEL_ID, Model, loadModel } from "./model.js";
import { PpmError, RgbImage, decodePpm } from "./ppm.js";

export const PPM_TYPE = "image/x-portable-pixmap";
export const PNG_TYPE = "image/png";

export interface Service {
  app: express.Express;
  /** Resolves once the model is loaded and /infer starts answering 200. */
  ready: Promise<void>;
}

function decodePng(body: Buffer): RgbImage {
  const png = PNG.sync.read(body);
  const pixels = new Uint8Array(png.width * png.height * 3);
  for (let i = 0; i < png.width * png.height; i++) {
    pixels[i * 3] = png.data[i * 4];
    pixels[i * 3 + 1] = png.data[i * 4 + 1];
    pixels[i * 3 + 2] = png.data[i * 4 + 2];
  }
  return { width: png.width, height: png.height, pixels };
}

function decodeBody(body: Buffer, contentType: string): RgbImage {
  if (contentType.startsWith(PNG_TYPE)) {
    return decodePng(body);
  }
  return decodePpm(new Uint8Array(body));
}

export function createService(loader: () => Promise<Model> = loadModel): Service {
  let model: Model | null = null;
  const app = express();
  app.use(express.raw({ type: [PPM_TYPE, PNG_TYPE], limit: "32mb" }));

  app.post("/infer", (req, res) => {
    if (model === null) {
      res.status(503).json({ error: "model not loaded" });
      return;
    }
    const body = Buffer.isBuffer(req.body) ? req.body : Buffer.alloc(0);
    if (body.length === 0) {
      res.status(400).json({ error: "empty or missing image body" });
      return;
    }
    let img: RgbImage;
    try {
      img = decodeBody(body, req.headers["content-type"] ?? "");
    } catch (exc) {
      const reason = exc instanceof PpmError || exc instanceof Error ? exc.message : String(exc);
      res.status(400).json({ error: `undecodable image: ${reason}` });
      return;
    }
    res.json({ model: MODEL_ID, class_count: CLASS_COUNT, probs: model.infer(img) });
  });

  app.get("/health", (_req, res) => {
    if (model === null) {
      res.status(503).json({ status: "loading", model: null, class_count: 0 });
      return;
    }
    res.json({ status: "ok", model: MODEL_ID, class_count: CLASS_COUNT });
  });

  app.use((_req, res) => {
    res.status(404).json({ error: "not found" });
  });

  const ready = loader().then((loaded) => {
    model = loaded;
  });
  return { app, ready };
}
