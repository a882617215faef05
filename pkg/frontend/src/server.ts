/**
 * Serving loops: stdio (default) and single-connection TCP.
 *
 * In stream mode stdout carries protocol replies only; all logging goes
 * to stderr. One request loop is enough: the client pipelines requests
 * and re-associates replies by id.
 */

import * as net from 'node:net';
import * as readline from 'node:readline';

import { Encoder } from './encoder';
import { handleLine } from './protocol';

export function serveStdio(encoder: Encoder): void {
  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  rl.on('line', (line: string) => {
    const reply = handleLine(line, encoder);
    if (reply !== null) {
      process.stdout.write(JSON.stringify(reply) + '\n');
    }
  });
  rl.on('close', () => {
    process.exit(0);
  });
  console.error(`sidecar ready: model=${encoder.modelName} dim=${encoder.dim} transport=stdio`);
}

export function serveTcp(encoder: Encoder, host: string, port: number): net.Server {
  const server = net.createServer((socket) => {
    console.error(`connection from ${socket.remoteAddress ?? 'unknown'}`);
    const rl = readline.createInterface({ input: socket, terminal: false });
    rl.on('line', (line: string) => {
      const reply = handleLine(line, encoder);
      if (reply !== null) {
        socket.write(JSON.stringify(reply) + '\n');
      }
    });
    socket.on('error', (err) => console.error(`socket error: ${err.message}`));
  });
  server.maxConnections = 1;
  server.listen(port, host, () => {
    console.error(`sidecar ready: model=${encoder.modelName} dim=${encoder.dim} tcp=${host}:${port}`);
  });
  return server;
}
