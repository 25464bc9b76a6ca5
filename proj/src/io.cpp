#include "ergmfg/io.hpp"

#include <charconv>
#include <fstream>

#include "ergmfg/errors.hpp"

namespace ergmfg {

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {
std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open output file '" + path + "'");
  return f;
}
}  // namespace

void write_field_csv(const std::string& path, const GridField& f) {
  auto out = open_out(path);
  const Domain& dom = *f.dom;
  out << (dom.dim() == 1 ? "index,x,value\n" : "index,x,y,value\n");
  for (std::size_t i = 0; i < dom.size(); ++i) {
    out << i << ',' << format_double(dom.coord(i).x);
    if (dom.dim() == 2) out << ',' << format_double(dom.coord(i).y);
    out << ',' << format_double(f.v[i]) << '\n';
  }
}

void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
  auto out = open_out(path);
  for (std::size_t c = 0; c < header.size(); ++c)
    out << header[c] << (c + 1 < header.size() ? "," : "\n");
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c)
      out << format_double(row[c]) << (c + 1 < row.size() ? "," : "\n");
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  auto out = open_out(path);
  out << content;
}

std::string plotting_script() {
  return R"PY(#!/usr/bin/env python3
"""Render the run artifacts found in this directory: value/density fields,
fixed-point residual traces, and near-boundary fit tables."""
import csv
import json
import os
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_csv(path):
    with open(path) as f:
        rows = list(csv.reader(f))
    header, data = rows[0], rows[1:]
    cols = {name: [float(r[i]) for r in data] for i, name in enumerate(header)}
    return cols


def maybe(path):
    return path if os.path.exists(path) else None


def main(run_dir):
    os.chdir(run_dir)
    for name, ylabel in (("u.csv", "u"), ("m.csv", "m")):
        if not maybe(name):
            continue
        cols = read_csv(name)
        fig, ax = plt.subplots()
        if "y" in cols:
            sc = ax.scatter(cols["x"], cols["y"], c=cols["value"], s=6)
            fig.colorbar(sc, ax=ax, label=ylabel)
        else:
            ax.plot(cols["x"], cols["value"], lw=1)
            ax.set_ylabel(ylabel)
        ax.set_xlabel("x")
        fig.savefig(name.replace(".csv", ".png"), dpi=130)
        plt.close(fig)

    if maybe("trace.csv"):
        cols = read_csv("trace.csv")
        fig, ax = plt.subplots()
        ax.semilogy(cols["iteration"], cols["residual"], marker="o", ms=3)
        ax.set_xlabel("iteration")
        ax.set_ylabel("fixed-point residual")
        fig.savefig("trace.png", dpi=130)
        plt.close(fig)

    if maybe("bands.csv"):
        cols = read_csv("bands.csv")
        fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
        axes[0].loglog(cols["d"], cols["u"], marker="o", ms=3)
        axes[0].set_xlabel("d")
        axes[0].set_ylabel("u")
        for key, label in (("grad_scaled", "(Du.nu) d^{1/(q-1)}"), ("drift_scaled", "(b.nu) d")):
            if key in cols:
                axes[1].semilogx(cols["d"], cols[key], marker="o", ms=3, label=label)
        axes[1].set_xlabel("d")
        axes[1].legend()
        fig.tight_layout()
        fig.savefig("bands.png", dpi=130)
        plt.close(fig)

    if maybe("histogram.csv"):
        cols = read_csv("histogram.csv")
        fig, ax = plt.subplots()
        ax.plot(cols["x"], cols["density"], label="empirical")
        if "reference" in cols:
            ax.plot(cols["x"], cols["reference"], label="grid density")
        ax.set_xlabel("x")
        ax.legend()
        fig.savefig("histogram.png", dpi=130)
        plt.close(fig)

    if maybe("report.json"):
        with open("report.json") as f:
            print(json.dumps(json.load(f), indent=2)[:2000])


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else ".")
)PY";
}

}  // namespace ergmfg
