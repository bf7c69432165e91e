#!/usr/bin/env python3
"""Writes src/dom/entities.inc from Python's copy of the HTML5 named character references."""
import html.entities
import sys

rows = sorted(html.entities.html5.items())
out = ["// Generated by tools/gen_entities.py; do not edit.",
       f"constexpr std::array<NamedReference, {len(rows)}> kNamedReferences{{{{"]
for name, value in rows:
    enc = "".join(f"\\x{b:02X}" for b in value.encode("utf-8"))
    out.append(f'    {{"{name}", "{enc}"}},')
out.append("}};")
with open(sys.argv[1], "w") as f:
    f.write("\n".join(out) + "\n")
