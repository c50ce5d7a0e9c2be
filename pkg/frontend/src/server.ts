/** Entry point: listen on DETECTOR_PORT (or PORT, default 8787) and load
 * the model in the background; requests racing the load see 503.
 */

import { createService } from "./app.js";
import { CLASS_COUNT, MODEL_ID } from "./model.js";

const raw = process.env.DETECTOR_PORT ?? process.env.PORT ?? "8787";
const port = Number(raw);
if (!Number.isInteger(port) || port < 0 || port > 65535) {
  console.error(`error: bad port '${raw}'`);
  process.exit(1);
}

const { app, ready } = createService();
const server = app.listen(port, () => {
  const address = server.address();
  const bound = typeof address === "object" && address !== null ? address.port : port;
  console.log(`detector-service listening on port ${bound}`);
});
ready.then(() => {
  console.log(`model ${MODEL_ID} ready (${CLASS_COUNT} classes)`);
});
