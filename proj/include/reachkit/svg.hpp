#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace reachkit::svg {

/// Minimal SVG chart output; enough for sweep figures, nothing more.

// One box-and-whisker per group (median, quartiles, min/max whiskers).
void write_box_plot(const std::filesystem::path& path, const std::string& title,
                    const std::string& y_label, const std::vector<std::string>& group_labels,
                    const std::vector<std::vector<double>>& groups);

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> mean;
    std::vector<double> stddev; // drawn as a band; may be empty
};

void write_line_plot(const std::filesystem::path& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series);

} // namespace reachkit::svg
