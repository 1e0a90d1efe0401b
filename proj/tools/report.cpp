#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <system_error>
#include <unistd.h>

namespace piac::cli {

std::string fmt(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);  // no negative zero
  return buf;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot move output into place: " + path.string());
  }
}

std::string trace_csv_header(bool with_path) {
  return with_path ? "path,t,node,theta,omega,eta,xi,u,mc\n" : "t,node,theta,omega,eta,xi,u,mc\n";
}

void append_trace_csv(std::string& out, const Trace& trace, int path) {
  const std::string prefix = path >= 0 ? std::to_string(path) + "," : "";
  for (const auto& s : trace.samples) {
    const std::string t = fmt(s.t);
    for (std::size_t i = 0; i < trace.node_ids.size(); ++i) {
      out += prefix;
      out += t;
      out += ',';
      out += std::to_string(trace.node_ids[i]);
      for (double v : {s.theta(i), s.omega(i), s.eta(i), s.xi(i), s.u(i), s.marginal_cost(i)}) {
        out += ',';
        out += fmt(v);
      }
      out += '\n';
    }
  }
}

std::string svg_chart(const std::vector<Series>& series, const std::string& title,
                      const std::string& xlabel, const std::string& ylabel) {
  constexpr double W = 720, H = 420, L = 70, R = 20, T = 40, B = 50;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.y[k])) continue;
      x0 = std::min(x0, s.x[k]);
      x1 = std::max(x1, s.x[k]);
      y0 = std::min(y0, s.y[k]);
      y1 = std::max(y1, s.y[k]);
    }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

  std::string o = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(W) + "\" height=\"" +
                  fmt(H) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + fmt(W / 2) + "\" y=\"22\" text-anchor=\"middle\">" + title + "</text>\n";
  o += "<rect x=\"" + fmt(L) + "\" y=\"" + fmt(T) + "\" width=\"" + fmt(W - L - R) + "\" height=\"" +
       fmt(H - T - B) + "\" fill=\"none\" stroke=\"black\"/>\n";
  o += "<text x=\"" + fmt(L) + "\" y=\"" + fmt(H - B + 16) + "\">" + fmt(x0) + "</text>\n";
  o += "<text x=\"" + fmt(W - R) + "\" y=\"" + fmt(H - B + 16) + "\" text-anchor=\"end\">" + fmt(x1) + "</text>\n";
  o += "<text x=\"" + fmt(L - 4) + "\" y=\"" + fmt(H - B) + "\" text-anchor=\"end\">" + fmt(y0) + "</text>\n";
  o += "<text x=\"" + fmt(L - 4) + "\" y=\"" + fmt(T + 10) + "\" text-anchor=\"end\">" + fmt(y1) + "</text>\n";
  o += "<text x=\"" + fmt(W / 2) + "\" y=\"" + fmt(H - 12) + "\" text-anchor=\"middle\">" + xlabel + "</text>\n";
  o += "<text x=\"14\" y=\"" + fmt(H / 2) + "\" transform=\"rotate(-90 14 " + fmt(H / 2) +
       ")\" text-anchor=\"middle\">" + ylabel + "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    std::string pts;
    for (std::size_t k = 0; k < series[s].x.size(); ++k) {
      if (!std::isfinite(series[s].y[k])) continue;
      pts += fmt(px(series[s].x[k])) + "," + fmt(py(series[s].y[k])) + " ";
    }
    o += "<polyline fill=\"none\" stroke-width=\"1.2\" stroke=\"" + std::string(colors[s % 10]) +
         "\" points=\"" + pts + "\"><title>" + series[s].label + "</title></polyline>\n";
  }
  o += "</svg>\n";
  return o;
}

}  // namespace piac::cli
