#include "urlformer/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "urlformer/errors.hpp"

namespace urlformer {
namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 400;
constexpr int kLeft = 64, kRight = 24, kTop = 40, kBottom = 48;

struct Series {
  const char* name;
  const char* color;
  std::vector<double> values;
};

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string line_chart(const std::string& title, const std::string& y_label,
                       const std::vector<std::size_t>& epochs, const std::vector<Series>& series,
                       double y_min, double y_max) {
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double x_min = double(epochs.front());
  const double x_max = double(epochs.back());
  const double x_span = std::max(1.0, x_max - x_min);
  const double y_span = std::max(1e-12, y_max - y_min);

  auto x_at = [&](double e) { return kLeft + (e - x_min) / x_span * plot_w; };
  auto y_at = [&](double v) { return kTop + (y_max - v) / y_span * plot_h; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kWidth) +
         "\" height=\"" + std::to_string(kHeight) + "\" viewBox=\"0 0 " + std::to_string(kWidth) +
         " " + std::to_string(kHeight) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + std::to_string(kWidth / 2) +
         "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
         title + "</text>\n";

  for (int i = 0; i <= 5; ++i) {
    const double v = y_min + y_span * i / 5.0;
    const double y = y_at(v);
    svg += "<line x1=\"" + std::to_string(kLeft) + "\" y1=\"" + fmt(y, "%.1f") + "\" x2=\"" +
           std::to_string(kWidth - kRight) + "\" y2=\"" + fmt(y, "%.1f") +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + std::to_string(kLeft - 8) + "\" y=\"" + fmt(y + 4, "%.1f") +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(v, "%.3g") +
           "</text>\n";
  }

  const std::size_t tick_step = std::max<std::size_t>(1, epochs.size() / 10);
  for (std::size_t i = 0; i < epochs.size(); i += tick_step) {
    const double x = x_at(double(epochs[i]));
    svg += "<line x1=\"" + fmt(x, "%.1f") + "\" y1=\"" + std::to_string(kHeight - kBottom) +
           "\" x2=\"" + fmt(x, "%.1f") + "\" y2=\"" + std::to_string(kHeight - kBottom + 5) +
           "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + fmt(x, "%.1f") + "\" y=\"" + std::to_string(kHeight - kBottom + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           std::to_string(epochs[i]) + "</text>\n";
  }

  svg += "<rect x=\"" + std::to_string(kLeft) + "\" y=\"" + std::to_string(kTop) + "\" width=\"" +
         fmt(plot_w, "%.1f") + "\" height=\"" + fmt(plot_h, "%.1f") +
         "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
  svg += "<text x=\"16\" y=\"" + std::to_string(kTop + int(plot_h / 2)) +
         "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 " +
         std::to_string(kTop + int(plot_h / 2)) + ")\" text-anchor=\"middle\">" + y_label +
         "</text>\n";
  svg += "<text x=\"" + std::to_string(kWidth / 2) + "\" y=\"" + std::to_string(kHeight - 10) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">epoch</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    std::string points;
    for (std::size_t i = 0; i < epochs.size(); ++i) {
      if (i) points += " ";
      points += fmt(x_at(double(epochs[i])), "%.2f") + "," + fmt(y_at(series[s].values[i]), "%.2f");
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(series[s].color) +
           "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";

    const int lx = kLeft + 12, ly = kTop + 16 + int(s) * 18;
    svg += "<line x1=\"" + std::to_string(lx) + "\" y1=\"" + std::to_string(ly - 4) + "\" x2=\"" +
           std::to_string(lx + 22) + "\" y2=\"" + std::to_string(ly - 4) + "\" stroke=\"" +
           std::string(series[s].color) + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + std::to_string(lx + 28) + "\" y=\"" + std::to_string(ly) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + series[s].name + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<std::size_t> epoch_axis(const std::vector<EpochRecord>& history) {
  if (history.empty()) throw UsageError("cannot plot an empty history");
  std::vector<std::size_t> epochs;
  epochs.reserve(history.size());
  for (const auto& r : history) epochs.push_back(r.epoch);
  return epochs;
}

}  // namespace

std::string accuracy_svg(const std::vector<EpochRecord>& history) {
  const auto epochs = epoch_axis(history);
  Series train{"train accuracy", "#1f77b4", {}};
  Series val{"validation accuracy", "#d62728", {}};
  for (const auto& r : history) {
    train.values.push_back(r.train_acc);
    val.values.push_back(r.val_acc);
  }
  return line_chart("Accuracy by epoch", "accuracy", epochs, {train, val}, 0.0, 1.0);
}

std::string loss_svg(const std::vector<EpochRecord>& history) {
  const auto epochs = epoch_axis(history);
  Series train{"train loss", "#1f77b4", {}};
  Series val{"validation loss", "#d62728", {}};
  double top = 0;
  for (const auto& r : history) {
    train.values.push_back(r.train_loss);
    val.values.push_back(r.val_loss);
    top = std::max({top, r.train_loss, r.val_loss});
  }
  return line_chart("Loss by epoch", "cross-entropy loss", epochs, {train, val}, 0.0,
                    top > 0 ? top * 1.05 : 1.0);
}

}  // namespace urlformer
