// CLI entry point.
//
//   node dist/src/main.js --stdio --table fixtures/demo_table.json
//   node dist/src/main.js --listen 127.0.0.1:9377 --table fixtures/demo_table.json

import { serveStdio, serveTcp } from "./server.js";
import { TableModel } from "./stubModel.js";

function usage(message?: string): never {
  if (message) {
    console.error(`error: ${message}`);
  }
  console.error(
    "usage: main.js --table <table.json> (--stdio | --listen <host:port>)",
  );
  process.exit(2);
}

function parseArgs(argv: string[]) {
  let table: string | undefined;
  let stdio = false;
  let listen: { host: string; port: number } | undefined;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--table") {
      table = argv[++i];
    } else if (arg === "--stdio") {
      stdio = true;
    } else if (arg === "--listen") {
      const value = argv[++i];
      const sep = value?.lastIndexOf(":") ?? -1;
      if (!value || sep <= 0) {
        usage(`bad --listen address ${JSON.stringify(value)}`);
      }
      const port = Number(value.slice(sep + 1));
      if (!Number.isInteger(port) || port < 0) {
        usage(`bad port in ${JSON.stringify(value)}`);
      }
      listen = { host: value.slice(0, sep), port };
    } else {
      usage(`unknown argument ${JSON.stringify(arg)}`);
    }
  }
  if (!table) {
    usage("--table is required");
  }
  if (stdio === (listen !== undefined)) {
    usage("choose exactly one of --stdio or --listen");
  }
  return { table, stdio, listen };
}

const args = parseArgs(process.argv.slice(2));
const model = TableModel.load(args.table);
if (args.stdio) {
  serveStdio(model);
} else if (args.listen) {
  const server = serveTcp(model, args.listen.host, args.listen.port);
  server.on("listening", () => {
    const addr = server.address();
    if (addr && typeof addr === "object") {
      console.error(`listening on ${addr.address}:${addr.port}`);
    }
  });
}
