#include "ccsp/image_io.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace ccsp {

Tensor load_image_rgb(const std::string& path) {
    cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
    if (bgr.empty()) throw InputError("could not read image: " + path);
    Tensor out({3, bgr.rows, bgr.cols});
    for (int y = 0; y < bgr.rows; ++y) {
        const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            out.at(0, y, x) = row[x][2] / 255.0;
            out.at(1, y, x) = row[x][1] / 255.0;
            out.at(2, y, x) = row[x][0] / 255.0;
        }
    }
    return out;
}

void save_image_rgb(const Tensor& image, const std::string& path) {
    if (image.rank() != 3 || image.dim(0) != 3) {
        throw InputError("save_image_rgb: expected (3, H, W), got " + shape_str(image.shape()));
    }
    const int H = static_cast<int>(image.dim(1));
    const int W = static_cast<int>(image.dim(2));
    cv::Mat bgr(H, W, CV_8UC3);
    for (int y = 0; y < H; ++y) {
        cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < W; ++x) {
            for (int c = 0; c < 3; ++c) {
                const double v = std::min(1.0, std::max(0.0, image.at(c, y, x)));
                row[x][2 - c] = static_cast<uchar>(std::lround(v * 255.0));
            }
        }
    }
    if (!cv::imwrite(path, bgr)) throw InputError("could not write image: " + path);
}

std::vector<LabeledBox> load_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("could not read label file: " + path);
    std::vector<LabeledBox> labels;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        LabeledBox lb;
        if (!(ls >> lb.cls >> lb.box.cx >> lb.box.cy >> lb.box.w >> lb.box.h)) {
            throw InputError("malformed label line in " + path + ": '" + line + "'");
        }
        labels.push_back(lb);
    }
    return labels;
}

void save_labels(const std::vector<LabeledBox>& labels, const std::string& path) {
    std::ostringstream out;
    for (const LabeledBox& lb : labels) {
        out << lb.cls << " " << lb.box.cx << " " << lb.box.cy << " " << lb.box.w << " " << lb.box.h
            << "\n";
    }
    write_file_bytes(path, out.str());
}

std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("could not read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("could not write file: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace ccsp
