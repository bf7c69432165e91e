#!/usr/bin/env node
// Runs every fixture script before and after instrumentation against a stub
// DOM and checks that the program's own output is unchanged and every marker
// line is well formed.
"use strict";

const { execFileSync } = require("child_process");
const fs = require("fs");
const os = require("os");
const path = require("path");
const vm = require("vm");

const [cli, dir] = process.argv.slice(2);
if (!cli || !dir) {
  console.error("usage: run_instrumented.js <field-sentry> <fixture-dir>");
  process.exit(1);
}

const SECRET = "uniq-PW-node0001";

function makeDocument() {
  const el = (name) => ({ name, value: SECRET, tagName: "INPUT" });
  const list = (name) => {
    const items = [el(name), el(name + "2")];
    items.item = (i) => items[i];
    return items;
  };
  const doc = {
    querySelector: (s) => el(s),
    querySelectorAll: (s) => list(s),
    getElementById: (s) => el(s),
    getElementsByClassName: (s) => list(s),
    getElementsByTagName: (s) => list(s),
    getElementsByName: (s) => list(s),
    createElement: (t) => ({ tagName: t }),
  };
  return doc;
}

function run(source) {
  const reports = [];
  const logs = [];
  const context = {
    document: makeDocument(),
    report: (s) => reports.push(String(s)),
    String,
    console: { log: (s) => logs.push(String(s)) },
  };
  vm.createContext(context);
  vm.runInContext(source, context, { timeout: 2000 });
  return { reports, logs };
}

const marker = /^FIELD_SENTRY::([A-Za-z_$][\w$]*)::(.*)$/;
const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "fs-node-"));
let failures = 0;
let checked = 0;

for (const name of fs.readdirSync(dir).sort()) {
  if (!name.endsWith(".js")) continue;
  const src = path.join(dir, name);
  const out = path.join(tmp, name);
  execFileSync(cli, ["instrument", src, "-o", out], { stdio: ["ignore", "ignore", "inherit"] });
  const original = run(fs.readFileSync(src, "utf8"));
  let instrumented;
  try {
    instrumented = run(fs.readFileSync(out, "utf8"));
  } catch (e) {
    console.log(`FAIL ${name}: instrumented script threw ${e}`);
    failures++;
    continue;
  }
  const same = JSON.stringify(original.reports) === JSON.stringify(instrumented.reports);
  const bad = instrumented.logs.filter((l) => !marker.test(l));
  const values = instrumented.logs.map((l) => marker.exec(l)).filter(Boolean).map((m) => m[2]);
  const okValues = values.every((v) => v === "<novalue>" || v.includes(SECRET));
  if (!same || bad.length || !okValues) {
    console.log(`FAIL ${name}: same_output=${same} bad_lines=${JSON.stringify(bad)} values=${JSON.stringify(values)}`);
    failures++;
  } else {
    console.log(`ok   ${name}: ${values.length} marker line(s)`);
  }
  checked++;
}

fs.rmSync(tmp, { recursive: true, force: true });
if (checked === 0) {
  console.log("no fixtures found");
  process.exit(1);
}
process.exit(failures ? 1 : 0);
