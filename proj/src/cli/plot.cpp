#include <algorithm>
#include <fstream>
#include <sstream>

#include "qal/cli.hpp"

namespace qal::cli {

namespace {

using Header = std::vector<std::string>;

bool starts_with(const Header& h, const Header& prefix) {
  return h.size() >= prefix.size() && std::equal(prefix.begin(), prefix.end(), h.begin());
}

PlotKind detect(const Header& h) {
  if (starts_with(h, {"j", "label", "P", "p"}) || h == Header{"state", "count", "frequency"} ||
      h == Header{"x", "probability"})
    return PlotKind::kHistogram;
  if (h.size() >= 2 && h[0] == "eps" && (h[1] == "l2_error" || h[1] == "distance"))
    return PlotKind::kConvergence;
  if (h == Header{"t", "x", "re", "im", "prob"}) return PlotKind::kWavepacket;
  return PlotKind::kAuto;
}

bool compatible(const Header& h, PlotKind kind) { return detect(h) == kind; }

std::string py_string(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\\' || c == '\'') out += '\\';
    out += c;
  }
  return out + "'";
}

const char* kPrelude = R"(import csv
import sys
from pathlib import Path

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt


def load(path):
    with open(path, newline='') as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith('#'))]
    header, body = rows[0], [r for r in rows[1:] if r]
    return header, body

)";

const char* kHistogram = R"(
header, body = load(CSV)
x = [r[1] if header[0] == 'j' else r[0] for r in body]
cols = [c for c in ('p', 'P', 'frequency', 'probability') if c in header]
fig, ax = plt.subplots()
width = 0.8 / max(len(cols), 1)
for k, c in enumerate(cols):
    i = header.index(c)
    ax.bar([n + k * width for n in range(len(x))], [float(r[i]) for r in body], width, label=c)
ax.set_xticks([n + 0.4 - width / 2 for n in range(len(x))])
ax.set_xticklabels(x, rotation=90 if len(x) > 20 else 0)
ax.set_xlabel(header[1] if header[0] == 'j' else header[0])
ax.set_ylabel('probability')
ax.legend()
)";

const char* kConvergence = R"(
header, body = load(CSV)
eps = [float(r[0]) for r in body]
err = [float(r[1]) for r in body]
fig, ax = plt.subplots()
ax.loglog(eps, err, 'o-', label=header[1])
ref = [err[-1] * e / eps[-1] for e in eps]
ax.loglog(eps, ref, '--', color='gray', label='order 1')
ax.set_xlabel('eps')
ax.set_ylabel(header[1])
ax.legend()
)";

const char* kWavepacket = R"(
header, body = load(CSV)
snaps = {}
for r in body:
    snaps.setdefault(float(r[0]), ([], []))
    snaps[float(r[0])][0].append(float(r[1]))
    snaps[float(r[0])][1].append(float(r[4]))
fig, ax = plt.subplots()
for t, (x, prob) in sorted(snaps.items()):
    ax.plot(x, prob, label=f't = {t:g}')
ax.set_xlabel('x')
ax.set_ylabel('|psi|^2')
ax.legend()
)";

const char* kSave = R"(
out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(CSV).with_suffix('.png')
fig.tight_layout()
fig.savefig(out)
)";

}  // namespace

PlotKind emit_plot_script(const std::string& csv_path, const std::string& script_path,
                          PlotKind kind) {
  const CsvTable table = read_csv_file(csv_path);
  const PlotKind found = detect(table.header);
  if (kind == PlotKind::kAuto) kind = found;
  if (kind == PlotKind::kAuto || !compatible(table.header, kind)) {
    std::string h;
    for (const auto& c : table.header) h += (h.empty() ? "" : ",") + c;
    throw UnknownSchema("no plot for CSV header '" + h + "'");
  }
  std::ofstream out(script_path);
  if (!out) throw InvalidArgument("cannot write '" + script_path + "'");
  out << kPrelude << "CSV = " << py_string(csv_path) << "\n";
  switch (kind) {
    case PlotKind::kHistogram: out << kHistogram; break;
    case PlotKind::kConvergence: out << kConvergence; break;
    case PlotKind::kWavepacket: out << kWavepacket; break;
    case PlotKind::kAuto: break;
  }
  out << kSave;
  return kind;
}

}  // namespace qal::cli
