#!/usr/bin/env node
// SMT-LIB2 driver for the z3-solver npm package (Z3 compiled to WebAssembly).
//
// Reads SMT-LIB2 text on stdin and evaluates it incrementally in a single
// solver context. Whenever a line consisting exactly of the sync command
//     (echo "[[sync]]")
// arrives, the buffered commands (sync line included) are evaluated and the
// captured solver output is written to stdout and flushed; remaining input
// is evaluated at EOF. The script therefore works both one-shot (pipe a
// complete script in) and interactively (a parent process drives
// check-sat / get-value / blocking-clause loops over the pipes).
//
// The z3-solver package is resolved from the local node_modules, from
// Z3_SOLVER_DIR, or from the global npm root.
'use strict';

const SYNC_LINE = '(echo "[[sync]]")';

function requireZ3() {
  const tried = [];
  const candidates = [];
  if (process.env.Z3_SOLVER_DIR) candidates.push(process.env.Z3_SOLVER_DIR);
  candidates.push('z3-solver');
  try {
    const { execSync } = require('child_process');
    const root = execSync('npm root -g', { encoding: 'utf8', stdio: ['ignore', 'pipe', 'ignore'] }).trim();
    candidates.push(root + '/z3-solver');
  } catch (e) { /* npm not reachable; fall through */ }
  for (const c of candidates) {
    try { return require(c); } catch (e) { tried.push(c); }
  }
  process.stderr.write('z3wasm: cannot locate the z3-solver npm package (tried: ' +
    tried.join(', ') + '); install it with "npm install -g z3-solver"\n');
  process.exit(3);
}

(async () => {
  const { init } = requireZ3();
  const { Z3 } = await init();
  const cfg = Z3.mk_config();
  const ctx = Z3.mk_context(cfg);

  let buf = [];
  const evalBuf = async () => {
    if (buf.length === 0) return;
    const text = buf.join('\n');
    buf = [];
    let out;
    try {
      out = await Z3.eval_smtlib2_string(ctx, text);
    } catch (e) {
      out = '(error "' + String(e).replace(/"/g, "'") + '")';
    }
    if (out && out.length) {
      process.stdout.write(out.endsWith('\n') ? out : out + '\n');
    }
  };

  const readline = require('readline');
  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  let chain = Promise.resolve();
  rl.on('line', (line) => {
    buf.push(line);
    if (line.trim() === SYNC_LINE) {
      chain = chain.then(evalBuf);
    }
  });
  rl.on('close', () => {
    chain = chain.then(evalBuf).then(() => process.exit(0));
  });
})().catch((e) => {
  process.stderr.write('z3wasm: ' + String(e) + '\n');
  process.exit(3);
});
