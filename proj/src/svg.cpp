#include "temponet/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace temponet {

namespace {

constexpr double kWidth = 860;
constexpr double kHeight = 480;
constexpr double kMarginLeft = 70;
constexpr double kMarginRight = 30;
constexpr double kMarginTop = 50;
constexpr double kMarginBottom = 55;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

struct Axis {
  double lo = 0, hi = 1;

  double to_px(double v, double px_lo, double px_hi) const {
    const double t = (v - lo) / (hi - lo);
    return px_lo + t * (px_hi - px_lo);
  }
};

Axis fit_axis(double lo, double hi) {
  if (!(std::isfinite(lo) && std::isfinite(hi))) {
    throw DataError("svg: non-finite plot data");
  }
  if (hi - lo < 1e-12) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = (hi - lo) * 0.06;
  return {lo - pad, hi + pad};
}

double x_px(double v, const Axis& a) {
  return a.to_px(v, kMarginLeft, kWidth - kMarginRight);
}
double y_px(double v, const Axis& a) {
  return a.to_px(v, kHeight - kMarginBottom, kMarginTop);  // y grows upward
}

void open_svg(std::ofstream& out, const std::string& path,
              const std::string& title) {
  out.open(path, std::ios::trunc);
  if (!out) throw DataError("cannot write: " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"28\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"17\">"
      << title << "</text>\n";
}

void draw_frame(std::ofstream& out, const Axis& xa, const Axis& ya,
                const std::string& x_label, const std::string& y_label) {
  out << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\""
      << kWidth - kMarginLeft - kMarginRight << "\" height=\""
      << kHeight - kMarginTop - kMarginBottom
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fy = ya.lo + (ya.hi - ya.lo) * i / 4.0;
    const double py = y_px(fy, ya);
    out << "<line x1=\"" << kMarginLeft - 4 << "\" y1=\"" << py << "\" x2=\""
        << kMarginLeft << "\" y2=\"" << py << "\" stroke=\"#444\"/>\n"
        << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << py + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"12\">"
        << num(fy) << "</text>\n";
    const double fx = xa.lo + (xa.hi - xa.lo) * i / 4.0;
    const double px = x_px(fx, xa);
    out << "<line x1=\"" << px << "\" y1=\"" << kHeight - kMarginBottom
        << "\" x2=\"" << px << "\" y2=\"" << kHeight - kMarginBottom + 4
        << "\" stroke=\"#444\"/>\n"
        << "<text x=\"" << px << "\" y=\"" << kHeight - kMarginBottom + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"12\">"
        << num(fx) << "</text>\n";
  }
  out << "<text x=\"" << (kMarginLeft + kWidth - kMarginRight) / 2 << "\" y=\""
      << kHeight - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">"
      << x_label << "</text>\n"
      << "<text x=\"18\" y=\"" << (kMarginTop + kHeight - kMarginBottom) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 18 "
      << (kMarginTop + kHeight - kMarginBottom) / 2 << ")\">" << y_label
      << "</text>\n";
}

void polyline(std::ofstream& out, const std::vector<double>& xs,
              const std::vector<double>& ys, const Axis& xa, const Axis& ya,
              const std::string& style) {
  out << "<polyline fill=\"none\" " << style << " points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out << num(x_px(xs[i], xa)) << ',' << num(y_px(ys[i], ya)) << ' ';
  }
  out << "\"/>\n";
}

// linear-interpolation quantile over a sorted sample
double quantile(const std::vector<double>& sorted, double p) {
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - std::floor(h)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

void write_forecast_svg(const std::string& path,
                        const std::vector<double>& context,
                        const std::vector<double>& truth,
                        const std::vector<double>& predicted,
                        const std::string& title) {
  if (truth.empty() || predicted.size() != truth.size()) {
    throw DataError("forecast svg: truth and prediction must have equal, "
                    "non-zero length");
  }
  const auto n_ctx = static_cast<Index>(context.size());
  const auto n_fut = static_cast<Index>(truth.size());

  double lo = truth[0], hi = truth[0];
  auto widen = [&](const std::vector<double>& xs) {
    for (double v : xs) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  };
  widen(context);
  widen(truth);
  widen(predicted);
  const Axis ya = fit_axis(lo, hi);
  const Axis xa = fit_axis(static_cast<double>(-n_ctx),
                           static_cast<double>(n_fut - 1));

  std::vector<double> ctx_x(context.size()), fut_x(truth.size());
  for (Index i = 0; i < n_ctx; ++i) ctx_x[static_cast<std::size_t>(i)] = static_cast<double>(i - n_ctx);
  for (Index i = 0; i < n_fut; ++i) fut_x[static_cast<std::size_t>(i)] = static_cast<double>(i);

  std::ofstream out;
  open_svg(out, path, title);
  draw_frame(out, xa, ya, "steps from forecast origin", "knee angle (deg)");
  const double origin_px = x_px(0, xa);
  out << "<line x1=\"" << origin_px << "\" y1=\"" << kMarginTop << "\" x2=\""
      << origin_px << "\" y2=\"" << kHeight - kMarginBottom
      << "\" stroke=\"#bbb\" stroke-dasharray=\"3,3\"/>\n";
  if (!context.empty()) {
    polyline(out, ctx_x, context, xa, ya, "stroke=\"#999\" stroke-width=\"1.5\"");
  }
  polyline(out, fut_x, truth, xa, ya, "stroke=\"#1a63a8\" stroke-width=\"2\"");
  polyline(out, fut_x, predicted, xa, ya,
           "stroke=\"#d0342c\" stroke-width=\"2\" stroke-dasharray=\"6,4\"");
  out << "<text x=\"" << kWidth - kMarginRight - 10 << "\" y=\""
      << kMarginTop + 18
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" "
         "fill=\"#1a63a8\">observed</text>\n"
      << "<text x=\"" << kWidth - kMarginRight - 10 << "\" y=\""
      << kMarginTop + 34
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" "
         "fill=\"#d0342c\">forecast</text>\n"
      << "</svg>\n";
}

void write_box_plot_svg(const std::string& path,
                        const std::vector<std::string>& labels,
                        const std::vector<std::vector<double>>& samples,
                        const std::string& title) {
  if (labels.empty() || labels.size() != samples.size()) {
    throw DataError("box plot: need one non-empty sample set per label");
  }
  double lo = 0, hi = 0;
  bool first = true;
  for (const auto& s : samples) {
    if (s.empty()) throw DataError("box plot: empty sample set");
    for (double v : s) {
      if (!std::isfinite(v)) throw DataError("box plot: non-finite sample");
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }
  }
  const Axis ya = fit_axis(lo, hi);

  std::ofstream out;
  open_svg(out, path, title);
  const Axis xa{0.0, static_cast<double>(labels.size())};
  draw_frame(out, xa, ya, "", "MAE (deg)");

  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::vector<double> s = samples[i];
    std::sort(s.begin(), s.end());
    const double q1 = quantile(s, 0.25);
    const double q2 = quantile(s, 0.50);
    const double q3 = quantile(s, 0.75);
    const double iqr = q3 - q1;
    double wlo = q1, whi = q3;
    for (double v : s) {
      if (v >= q1 - 1.5 * iqr) {
        wlo = std::min(wlo, v);
        break;
      }
    }
    for (auto it = s.rbegin(); it != s.rend(); ++it) {
      if (*it <= q3 + 1.5 * iqr) {
        whi = std::max(whi, *it);
        break;
      }
    }
    const double cx = x_px(static_cast<double>(i) + 0.5, xa);
    const double half = 0.5 * (x_px(0.8, xa) - x_px(0.5, xa));
    out << "<line x1=\"" << cx << "\" y1=\"" << y_px(wlo, ya) << "\" x2=\""
        << cx << "\" y2=\"" << y_px(whi, ya) << "\" stroke=\"#444\"/>\n";
    for (double w : {wlo, whi}) {
      out << "<line x1=\"" << cx - half / 2 << "\" y1=\"" << y_px(w, ya)
          << "\" x2=\"" << cx + half / 2 << "\" y2=\"" << y_px(w, ya)
          << "\" stroke=\"#444\"/>\n";
    }
    out << "<rect x=\"" << cx - half << "\" y=\"" << y_px(q3, ya)
        << "\" width=\"" << 2 * half << "\" height=\""
        << y_px(q1, ya) - y_px(q3, ya)
        << "\" fill=\"#9ec3e6\" stroke=\"#1a63a8\"/>\n"
        << "<line x1=\"" << cx - half << "\" y1=\"" << y_px(q2, ya)
        << "\" x2=\"" << cx + half << "\" y2=\"" << y_px(q2, ya)
        << "\" stroke=\"#0b3a66\" stroke-width=\"2\"/>\n";
    for (double v : s) {
      if (v < q1 - 1.5 * iqr || v > q3 + 1.5 * iqr) {
        out << "<circle cx=\"" << cx << "\" cy=\"" << y_px(v, ya)
            << "\" r=\"2\" fill=\"none\" stroke=\"#777\"/>\n";
      }
    }
    out << "<text x=\"" << cx << "\" y=\"" << kHeight - kMarginBottom + 34
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\">"
        << labels[i] << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace temponet
