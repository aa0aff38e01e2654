#pragma once

#include <string>
#include <vector>

namespace rulewise::orchestrator::svg {

struct Series {
  std::string name;
  std::vector<double> y;  // one value per category; NaN leaves a gap
};

/// Lines over evenly spaced categories (data volumes, noise levels, iterations).
std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<std::string>& categories, const std::vector<Series>& series);

/// One bar per label, with optional symmetric error whiskers.
std::string bar_chart(const std::string& title, const std::string& y_label, const std::vector<std::string>& labels,
                      const std::vector<double>& values, const std::vector<double>& errors = {});

struct BoxGroup {
  std::string label;
  std::vector<double> values;
};

/// Box-and-whisker per group: quartiles, whiskers at 1.5 IQR, outliers as dots.
std::string box_chart(const std::string& title, const std::string& y_label, const std::vector<BoxGroup>& groups);

}  // namespace rulewise::orchestrator::svg
