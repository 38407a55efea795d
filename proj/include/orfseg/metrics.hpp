#pragma once

#include <cstdint>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "orfseg/errors.hpp"
#include "orfseg/raster.hpp"

namespace orfseg {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
};

inline ConfusionCounts confusion(const Mask& pred, const Mask& truth) {
  if (!same_dimensions(pred, truth))
    throw validation_error("confusion: dimension mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    if (truth.data[i]) {
      pred.data[i] ? ++c.tp : ++c.fn;
    } else {
      pred.data[i] ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

// Degenerate denominators are vacuously correct (1.0) so pure-negative
// images do not poison dataset means; callers can flag them via the
// *_vacuous helpers.
inline bool precision_vacuous(const ConfusionCounts& c) { return c.tp + c.fp == 0; }
inline bool recall_vacuous(const ConfusionCounts& c) { return c.tp + c.fn == 0; }

inline double precision(const ConfusionCounts& c) {
  if (precision_vacuous(c)) return 1.0;
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

inline double recall(const ConfusionCounts& c) {
  if (recall_vacuous(c)) return 1.0;
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

inline double accuracy(const ConfusionCounts& c) {
  if (c.total() == 0) return 1.0;
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

inline bool iou_inverted(const Mask& truth) { return truth.positive_count() == 0; }

// Intersection over union; when the ground truth is pure negative both masks
// are inverted first, so a perfect all-negative prediction scores 1.0.
inline double iou(const Mask& pred, const Mask& truth) {
  if (!same_dimensions(pred, truth)) throw validation_error("iou: dimension mismatch");
  const bool invert = iou_inverted(truth);
  std::uint64_t inter = 0;
  std::uint64_t uni = 0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    bool p = invert ? !pred.data[i] : pred.data[i] != 0;
    bool t = invert ? !truth.data[i] : truth.data[i] != 0;
    inter += p && t;
    uni += p || t;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

struct PerImageMetrics {
  std::string id;
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
  double iou = 0.0;
  std::vector<std::string> flags;
};

struct MetricsReport {
  std::vector<PerImageMetrics> per_image;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_accuracy = 0.0;
  double mean_iou = 0.0;
};

// View over one prediction/truth pair.
struct PredTruth {
  std::string id;
  const Mask* pred = nullptr;
  const Mask* truth = nullptr;
};

// Per-image metrics plus unweighted means, in input order.
inline MetricsReport evaluate(const std::vector<PredTruth>& items) {
  MetricsReport report;
  for (const auto& item : items) {
    if (!item.pred || !item.truth)
      throw validation_error("evaluate: missing prediction or truth for '" + item.id + "'");
    ConfusionCounts c = confusion(*item.pred, *item.truth);
    PerImageMetrics m;
    m.id = item.id;
    m.precision = precision(c);
    m.recall = recall(c);
    m.accuracy = accuracy(c);
    m.iou = iou(*item.pred, *item.truth);
    if (precision_vacuous(c)) m.flags.push_back("vacuous_precision");
    if (recall_vacuous(c)) m.flags.push_back("vacuous_recall");
    if (iou_inverted(*item.truth)) m.flags.push_back("iou_inverted");
    report.per_image.push_back(std::move(m));
  }
  if (!report.per_image.empty()) {
    for (const auto& m : report.per_image) {
      report.mean_precision += m.precision;
      report.mean_recall += m.recall;
      report.mean_accuracy += m.accuracy;
      report.mean_iou += m.iou;
    }
    double n = static_cast<double>(report.per_image.size());
    report.mean_precision /= n;
    report.mean_recall /= n;
    report.mean_accuracy /= n;
    report.mean_iou /= n;
  }
  return report;
}

inline void print_table(const MetricsReport& report, std::ostream& os) {
  os << std::left << std::setw(20) << "id" << std::right << std::setw(11) << "precision"
     << std::setw(11) << "recall" << std::setw(11) << "accuracy" << std::setw(11) << "iou"
     << "  flags\n";
  auto row = [&](const std::string& id, double p, double r, double a, double i,
                 const std::string& flags) {
    os << std::left << std::setw(20) << id << std::right << std::fixed << std::setprecision(4)
       << std::setw(11) << p << std::setw(11) << r << std::setw(11) << a << std::setw(11) << i
       << "  " << flags << "\n";
    os.unsetf(std::ios::fixed);
  };
  for (const auto& m : report.per_image) {
    std::string flags;
    for (const auto& f : m.flags) {
      if (!flags.empty()) flags += ",";
      flags += f;
    }
    row(m.id, m.precision, m.recall, m.accuracy, m.iou, flags);
  }
  row("(mean)", report.mean_precision, report.mean_recall, report.mean_accuracy,
      report.mean_iou, "");
}

inline nlohmann::json report_json(const MetricsReport& report) {
  nlohmann::json j;
  j["per_image"] = nlohmann::json::array();
  for (const auto& m : report.per_image) {
    nlohmann::json e;
    e["id"] = m.id;
    e["precision"] = m.precision;
    e["recall"] = m.recall;
    e["accuracy"] = m.accuracy;
    e["iou"] = m.iou;
    e["flags"] = m.flags;
    j["per_image"].push_back(e);
  }
  j["mean_precision"] = report.mean_precision;
  j["mean_recall"] = report.mean_recall;
  j["mean_accuracy"] = report.mean_accuracy;
  j["mean_iou"] = report.mean_iou;
  return j;
}

}  // namespace orfseg
