#include "reachkit/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "reachkit/common.hpp"

namespace reachkit::svg {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

const char* kSeriesColors[] = {"#2266aa", "#aa4422", "#22aa66", "#aa22aa", "#888822"};

struct Frame {
    double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;

    double px(double x) const {
        return kLeft + (x - x_lo) / (x_hi - x_lo) * (kWidth - kLeft - kRight);
    }
    double py(double y) const {
        return kHeight - kBottom - (y - y_lo) / (y_hi - y_lo) * (kHeight - kTop - kBottom);
    }
};

void pad_range(double& lo, double& hi) {
    if (hi <= lo) {
        double bump = std::max(1.0, std::abs(lo)) * 0.1;
        lo -= bump;
        hi += bump;
    } else {
        double pad = 0.06 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
}

std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

class Doc {
  public:
    Doc(const std::string& title) {
        buf_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
             << "\" height=\"" << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
        buf_ << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        text(kWidth / 2, kTop - 18, esc(title), "middle", 14);
    }

    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width = 1.0) {
        buf_ << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2
             << "\" stroke=\"" << stroke << "\" stroke-width=\"" << width << "\"/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill,
              const std::string& stroke) {
        buf_ << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << h
             << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\"/>\n";
    }

    void text(double x, double y, const std::string& s, const std::string& anchor = "middle",
              int size = 12, const std::string& transform = "") {
        buf_ << "<text x=\"" << x << "\" y=\"" << y << "\" text-anchor=\"" << anchor
             << "\" font-size=\"" << size << "\"";
        if (!transform.empty()) buf_ << " transform=\"" << transform << "\"";
        buf_ << ">" << s << "</text>\n";
    }

    void poly(const std::vector<std::pair<double, double>>& pts, const std::string& stroke,
              const std::string& fill = "none", double width = 1.5) {
        buf_ << "<polyline points=\"";
        for (const auto& [x, y] : pts) buf_ << x << ',' << y << ' ';
        buf_ << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\" stroke-width=\"" << width
             << "\"/>\n";
    }

    void polygon(const std::vector<std::pair<double, double>>& pts, const std::string& fill) {
        buf_ << "<polygon points=\"";
        for (const auto& [x, y] : pts) buf_ << x << ',' << y << ' ';
        buf_ << "\" fill=\"" << fill << "\" stroke=\"none\" opacity=\"0.25\"/>\n";
    }

    void axes(const Frame& f, const std::string& x_label, const std::string& y_label,
              bool y_ticks = true) {
        line(kLeft, kHeight - kBottom, kWidth - kRight, kHeight - kBottom, "#000");
        line(kLeft, kTop, kLeft, kHeight - kBottom, "#000");
        text((kLeft + kWidth - kRight) / 2, kHeight - 12, esc(x_label));
        text(16, (kTop + kHeight - kBottom) / 2, esc(y_label), "middle", 12,
             "rotate(-90 16 " + std::to_string((kTop + kHeight - kBottom) / 2) + ")");
        if (y_ticks) {
            for (int i = 0; i <= 4; ++i) {
                double v = f.y_lo + (f.y_hi - f.y_lo) * i / 4;
                double y = f.py(v);
                line(kLeft - 4, y, kLeft, y, "#000");
                std::ostringstream lab;
                lab.precision(3);
                lab << v;
                text(kLeft - 8, y + 4, lab.str(), "end", 10);
            }
        }
    }

    void save(const std::filesystem::path& path) {
        buf_ << "</svg>\n";
        std::ofstream out(path);
        out << buf_.str();
    }

  private:
    std::ostringstream buf_;
};

} // namespace

void write_box_plot(const std::filesystem::path& path, const std::string& title,
                    const std::string& y_label, const std::vector<std::string>& group_labels,
                    const std::vector<std::vector<double>>& groups) {
    Doc doc(title);
    Frame f;
    f.x_lo = 0;
    f.x_hi = static_cast<double>(groups.size());
    bool any = false;
    for (const auto& g : groups)
        for (double v : g) {
            if (!any) {
                f.y_lo = f.y_hi = v;
                any = true;
            }
            f.y_lo = std::min(f.y_lo, v);
            f.y_hi = std::max(f.y_hi, v);
        }
    pad_range(f.y_lo, f.y_hi);
    doc.axes(f, "", y_label);

    for (std::size_t i = 0; i < groups.size(); ++i) {
        double cx = f.px(static_cast<double>(i) + 0.5);
        doc.text(cx, kHeight - kBottom + 16, esc(group_labels[i]), "middle", 11);
        if (groups[i].empty()) continue;
        std::vector<double> v = groups[i];
        std::sort(v.begin(), v.end());
        double lo = v.front(), hi = v.back();
        double q1 = quantile_of(v, 0.25), q2 = quantile_of(v, 0.5), q3 = quantile_of(v, 0.75);
        double half = 0.28 * (f.px(1) - f.px(0));
        doc.line(cx, f.py(lo), cx, f.py(q1), "#333");
        doc.line(cx, f.py(q3), cx, f.py(hi), "#333");
        doc.line(cx - half * 0.6, f.py(lo), cx + half * 0.6, f.py(lo), "#333");
        doc.line(cx - half * 0.6, f.py(hi), cx + half * 0.6, f.py(hi), "#333");
        doc.rect(cx - half, f.py(q3), 2 * half, f.py(q1) - f.py(q3), "#cfe0f0", "#2266aa");
        doc.line(cx - half, f.py(q2), cx + half, f.py(q2), "#aa4422", 2.0);
    }
    doc.save(path);
}

void write_line_plot(const std::filesystem::path& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series) {
    Doc doc(title);
    Frame f;
    bool any = false;
    for (const Series& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            double sd = i < s.stddev.size() ? s.stddev[i] : 0.0;
            double lo = s.mean[i] - sd, hi = s.mean[i] + sd;
            if (!any) {
                f.x_lo = f.x_hi = s.x[i];
                f.y_lo = lo;
                f.y_hi = hi;
                any = true;
            }
            f.x_lo = std::min(f.x_lo, s.x[i]);
            f.x_hi = std::max(f.x_hi, s.x[i]);
            f.y_lo = std::min(f.y_lo, lo);
            f.y_hi = std::max(f.y_hi, hi);
        }
    pad_range(f.x_lo, f.x_hi);
    pad_range(f.y_lo, f.y_hi);
    doc.axes(f, x_label, y_label);

    for (std::size_t si = 0; si < series.size(); ++si) {
        const Series& s = series[si];
        const char* color = kSeriesColors[si % 5];
        if (!s.stddev.empty()) {
            std::vector<std::pair<double, double>> band;
            for (std::size_t i = 0; i < s.x.size(); ++i)
                band.emplace_back(f.px(s.x[i]), f.py(s.mean[i] + s.stddev[i]));
            for (std::size_t i = s.x.size(); i-- > 0;)
                band.emplace_back(f.px(s.x[i]), f.py(s.mean[i] - s.stddev[i]));
            doc.polygon(band, color);
        }
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < s.x.size(); ++i)
            pts.emplace_back(f.px(s.x[i]), f.py(s.mean[i]));
        doc.poly(pts, color);
        doc.text(kWidth - kRight - 4, kTop + 16 + 14 * static_cast<double>(si), esc(s.label),
                 "end", 11);
    }
    doc.save(path);
}

} // namespace reachkit::svg
