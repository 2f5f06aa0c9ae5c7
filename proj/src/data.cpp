#include "topocl/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "topocl/rng.hpp"

namespace topocl {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_u32_be(std::ifstream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) {
        throw IoError(path + ": unexpected end of file at byte offset " +
                      std::to_string(static_cast<long long>(in.gcount())));
    }
    return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

std::vector<unsigned char> read_exact(std::ifstream& in, std::size_t n, std::size_t offset,
                                      const std::string& path) {
    std::vector<unsigned char> buf(n);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
        throw IoError(path + ": truncated at byte offset " +
                      std::to_string(offset + static_cast<std::size_t>(in.gcount())));
    }
    return buf;
}

// One fixed permutation applied to every feature vector of a dataset.
Dataset permute_features(const Dataset& base, const std::vector<int>& perm) {
    Dataset out = base;
    for (std::size_t i = 0; i < out.x.size(); ++i) {
        for (std::size_t d = 0; d < perm.size(); ++d) {
            out.x[i][d] = base.x[i][static_cast<std::size_t>(perm[d])];
        }
    }
    return out;
}

Dataset subset(const Dataset& base, const std::vector<int>& order, int from, int count) {
    Dataset out;
    out.feature_dim = base.feature_dim;
    out.img_rows = base.img_rows;
    out.img_cols = base.img_cols;
    out.x.reserve(count);
    out.y.reserve(count);
    for (int i = from; i < from + count; ++i) {
        out.x.push_back(base.x[static_cast<std::size_t>(order[i])]);
        out.y.push_back(base.y[static_cast<std::size_t>(order[i])]);
    }
    return out;
}

int count_classes(const Dataset& d) {
    int top = 0;
    for (int y : d.y) top = std::max(top, y);
    return top + 1;
}

void require_stream_inputs(const Dataset& train_base, const Dataset& test_base,
                           const StreamParams& params) {
    if (params.num_tasks < 1) throw InsufficientData("need at least one task");
    if (static_cast<long long>(params.num_tasks) * params.train_per_task > train_base.size()) {
        throw InsufficientData("need " + std::to_string(params.num_tasks * params.train_per_task) +
                               " training examples, have " + std::to_string(train_base.size()));
    }
    if (params.test_per_task > test_base.size()) {
        throw InsufficientData("need " + std::to_string(params.test_per_task) +
                               " test examples, have " + std::to_string(test_base.size()));
    }
    if (train_base.feature_dim != test_base.feature_dim) {
        throw ShapeMismatch("train/test feature dimensions differ");
    }
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw IoError("cannot open " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("cannot open " + labels_path);

    const std::uint32_t img_magic = read_u32_be(img, images_path);
    if (img_magic != kImagesMagic) {
        throw BadMagic(images_path + ": magic " + std::to_string(img_magic));
    }
    const std::uint32_t lab_magic = read_u32_be(lab, labels_path);
    if (lab_magic != kLabelsMagic) {
        throw BadMagic(labels_path + ": magic " + std::to_string(lab_magic));
    }

    const std::uint32_t n_images = read_u32_be(img, images_path);
    const std::uint32_t rows = read_u32_be(img, images_path);
    const std::uint32_t cols = read_u32_be(img, images_path);
    const std::uint32_t n_labels = read_u32_be(lab, labels_path);
    if (n_images != n_labels) {
        throw CountMismatch(std::to_string(n_images) + " images vs " + std::to_string(n_labels) +
                            " labels");
    }

    Dataset out;
    out.img_rows = static_cast<int>(rows);
    out.img_cols = static_cast<int>(cols);
    out.feature_dim = static_cast<int>(rows * cols);
    out.x.reserve(n_images);
    out.y.reserve(n_images);

    const std::size_t px = static_cast<std::size_t>(rows) * cols;
    for (std::uint32_t i = 0; i < n_images; ++i) {
        const auto raw = read_exact(img, px, 16 + static_cast<std::size_t>(i) * px, images_path);
        std::vector<float> v(px);
        for (std::size_t j = 0; j < px; ++j) v[j] = static_cast<float>(raw[j]) / 255.0f;
        out.x.push_back(std::move(v));
    }
    const auto raw_labels = read_exact(lab, n_labels, 8, labels_path);
    for (std::uint32_t i = 0; i < n_labels; ++i) out.y.push_back(static_cast<int>(raw_labels[i]));
    return out;
}

Dataset downsample2x(const Dataset& base) {
    if (base.img_rows % 2 != 0 || base.img_cols % 2 != 0) {
        throw ShapeMismatch("downsample2x needs even image dimensions");
    }
    Dataset out;
    out.img_rows = base.img_rows / 2;
    out.img_cols = base.img_cols / 2;
    out.feature_dim = out.img_rows * out.img_cols;
    out.y = base.y;
    out.x.reserve(base.x.size());
    for (const auto& img : base.x) {
        std::vector<float> v(static_cast<std::size_t>(out.feature_dim));
        for (int r = 0; r < out.img_rows; ++r) {
            for (int c = 0; c < out.img_cols; ++c) {
                const int r2 = 2 * r, c2 = 2 * c;
                const float sum = img[static_cast<std::size_t>(r2) * base.img_cols + c2] +
                                  img[static_cast<std::size_t>(r2) * base.img_cols + c2 + 1] +
                                  img[static_cast<std::size_t>(r2 + 1) * base.img_cols + c2] +
                                  img[static_cast<std::size_t>(r2 + 1) * base.img_cols + c2 + 1];
                v[static_cast<std::size_t>(r) * out.img_cols + c] = sum / 4.0f;
            }
        }
        out.x.push_back(std::move(v));
    }
    return out;
}

TaskStream make_permuted_tasks(const Dataset& train_base, const Dataset& test_base,
                               const StreamParams& params) {
    require_stream_inputs(train_base, test_base, params);

    Rng rng(derive_seed(params.seed, 0x9e01));
    std::vector<int> train_order(train_base.size());
    std::iota(train_order.begin(), train_order.end(), 0);
    rng.shuffle(train_order);
    std::vector<int> test_order(test_base.size());
    std::iota(test_order.begin(), test_order.end(), 0);
    rng.shuffle(test_order);

    TaskStream stream;
    stream.feature_dim = train_base.feature_dim;
    stream.num_classes = std::max(count_classes(train_base), count_classes(test_base));
    stream.description = "permuted";

    std::vector<int> identity(train_base.feature_dim);
    std::iota(identity.begin(), identity.end(), 0);

    for (int t = 0; t < params.num_tasks; ++t) {
        std::vector<int> perm = identity;
        if (t > 0) rng.shuffle(perm);

        Task task;
        task.task_id = t + 1;
        task.train = permute_features(
            subset(train_base, train_order, t * params.train_per_task, params.train_per_task),
            perm);
        task.test = permute_features(subset(test_base, test_order, 0, params.test_per_task), perm);
        stream.tasks.push_back(std::move(task));
    }
    return stream;
}

std::vector<float> rotate_image(const std::vector<float>& img, int rows, int cols,
                                double degrees) {
    const double rad = degrees * 3.14159265358979323846 / 180.0;
    const double cs = std::cos(rad), sn = std::sin(rad);
    const double cy = (rows - 1) / 2.0, cx = (cols - 1) / 2.0;

    std::vector<float> out(img.size(), 0.0f);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            // inverse map: rotate the output coordinate back into the source
            const double dy = r - cy, dx = c - cx;
            const double sy = cy + (sn * dx + cs * dy);
            const double sx = cx + (cs * dx - sn * dy);
            const int y0 = static_cast<int>(std::floor(sy));
            const int x0 = static_cast<int>(std::floor(sx));
            const double fy = sy - y0, fx = sx - x0;
            double acc = 0.0;
            for (int oy = 0; oy <= 1; ++oy) {
                for (int ox = 0; ox <= 1; ++ox) {
                    const int yy = y0 + oy, xx = x0 + ox;
                    if (yy < 0 || yy >= rows || xx < 0 || xx >= cols) continue;
                    const double w = (oy ? fy : 1.0 - fy) * (ox ? fx : 1.0 - fx);
                    acc += w * img[static_cast<std::size_t>(yy) * cols + xx];
                }
            }
            out[static_cast<std::size_t>(r) * cols + c] = static_cast<float>(acc);
        }
    }
    return out;
}

TaskStream make_rotated_tasks(const Dataset& train_base, const Dataset& test_base,
                              const StreamParams& params, bool evenly_spaced) {
    require_stream_inputs(train_base, test_base, params);
    if (train_base.img_rows == 0 || train_base.img_cols == 0) {
        throw ShapeMismatch("rotated tasks need image-shaped features");
    }

    Rng rng(derive_seed(params.seed, 0x9e02));
    std::vector<int> train_order(train_base.size());
    std::iota(train_order.begin(), train_order.end(), 0);
    rng.shuffle(train_order);
    std::vector<int> test_order(test_base.size());
    std::iota(test_order.begin(), test_order.end(), 0);
    rng.shuffle(test_order);

    TaskStream stream;
    stream.feature_dim = train_base.feature_dim;
    stream.num_classes = std::max(count_classes(train_base), count_classes(test_base));
    stream.description = "rotated";

    auto rotate_dataset = [&](Dataset d, double angle) {
        if (angle != 0.0) {
            for (auto& img : d.x) img = rotate_image(img, d.img_rows, d.img_cols, angle);
        }
        return d;
    };

    for (int t = 0; t < params.num_tasks; ++t) {
        double angle = 0.0;
        if (t > 0) {
            angle = evenly_spaced ? 180.0 * t / params.num_tasks : rng.uniform(0.0, 180.0);
        }
        Task task;
        task.task_id = t + 1;
        task.train = rotate_dataset(
            subset(train_base, train_order, t * params.train_per_task, params.train_per_task),
            angle);
        task.test = rotate_dataset(subset(test_base, test_order, 0, params.test_per_task), angle);
        stream.tasks.push_back(std::move(task));
    }
    return stream;
}

TaskStream make_synthetic_tasks(const SyntheticParams& params) {
    if (params.num_tasks < 1 || params.num_classes < 2 || params.feature_dim < 1 ||
        params.train_per_task < 1 || params.test_per_task < 0) {
        throw InsufficientData("synthetic stream parameters must be positive");
    }

    Rng rng(derive_seed(params.seed, 0x9e03));

    // fixed class means shared by every task
    std::vector<std::vector<double>> means(params.num_classes,
                                           std::vector<double>(params.feature_dim));
    for (auto& m : means) {
        for (auto& v : m) v = params.spread * rng.normal();
    }

    auto draw_dataset = [&](int count) {
        Dataset d;
        d.feature_dim = params.feature_dim;
        d.x.reserve(count);
        d.y.reserve(count);
        for (int i = 0; i < count; ++i) {
            const int cls = static_cast<int>(rng.index(params.num_classes));
            std::vector<float> v(static_cast<std::size_t>(params.feature_dim));
            for (int j = 0; j < params.feature_dim; ++j) {
                v[static_cast<std::size_t>(j)] =
                    static_cast<float>(means[cls][static_cast<std::size_t>(j)] +
                                       params.noise * rng.normal());
            }
            d.x.push_back(std::move(v));
            d.y.push_back(cls);
        }
        return d;
    };

    TaskStream stream;
    stream.feature_dim = params.feature_dim;
    stream.num_classes = params.num_classes;
    stream.description = "synthetic";

    std::vector<int> identity(params.feature_dim);
    std::iota(identity.begin(), identity.end(), 0);

    for (int t = 0; t < params.num_tasks; ++t) {
        std::vector<int> perm = identity;
        if (t > 0) rng.shuffle(perm);
        Task task;
        task.task_id = t + 1;
        task.train = permute_features(draw_dataset(params.train_per_task), perm);
        task.test = permute_features(draw_dataset(params.test_per_task), perm);
        stream.tasks.push_back(std::move(task));
    }
    return stream;
}

namespace {

void write_u32_le(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32_le_strict(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw IoError(path + ": unexpected end of file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

void write_dataset(std::ostream& out, const Dataset& d) {
    write_u32_le(out, static_cast<std::uint32_t>(d.size()));
    write_u32_le(out, static_cast<std::uint32_t>(d.feature_dim));
    for (const auto& row : d.x) {
        for (float v : row) {
            std::uint32_t bits;
            std::memcpy(&bits, &v, 4);
            write_u32_le(out, bits);
        }
    }
    for (int y : d.y) write_u32_le(out, static_cast<std::uint32_t>(y));
}

Dataset read_dataset(std::istream& in, const std::string& path, int img_rows, int img_cols) {
    Dataset d;
    const std::uint32_t n = read_u32_le_strict(in, path);
    d.feature_dim = static_cast<int>(read_u32_le_strict(in, path));
    d.img_rows = img_rows;
    d.img_cols = img_cols;
    d.x.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        std::vector<float> row(static_cast<std::size_t>(d.feature_dim));
        for (float& v : row) {
            const std::uint32_t bits = read_u32_le_strict(in, path);
            std::memcpy(&v, &bits, 4);
        }
        d.x.push_back(std::move(row));
    }
    d.y.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        d.y.push_back(static_cast<int>(read_u32_le_strict(in, path)));
    }
    return d;
}

}  // namespace

void save_task_stream(const TaskStream& stream, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);

    nlohmann::json manifest;
    manifest["description"] = stream.description;
    manifest["feature_dim"] = stream.feature_dim;
    manifest["num_classes"] = stream.num_classes;
    manifest["num_tasks"] = stream.tasks.size();
    nlohmann::json task_meta = nlohmann::json::array();
    for (const Task& t : stream.tasks) {
        task_meta.push_back({{"task_id", t.task_id},
                             {"train", t.train.size()},
                             {"test", t.test.size()},
                             {"img_rows", t.train.img_rows},
                             {"img_cols", t.train.img_cols}});
    }
    manifest["tasks"] = task_meta;
    std::ofstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw IoError("cannot write manifest in " + dir);
    mf << manifest.dump(2) << '\n';

    for (std::size_t i = 0; i < stream.tasks.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "task_%03zu.bin", i);
        std::ofstream out(fs::path(dir) / name, std::ios::binary);
        if (!out) throw IoError("cannot write " + std::string(name) + " in " + dir);
        write_dataset(out, stream.tasks[i].train);
        write_dataset(out, stream.tasks[i].test);
        if (!out) throw IoError("write failed for " + std::string(name));
    }
}

TaskStream load_task_stream(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw IoError("cannot open manifest in " + dir);
    nlohmann::json manifest = nlohmann::json::parse(mf, nullptr, false);
    if (manifest.is_discarded()) throw IoError("malformed manifest in " + dir);

    TaskStream stream;
    stream.description = manifest.value("description", "");
    stream.feature_dim = manifest.at("feature_dim").get<int>();
    stream.num_classes = manifest.at("num_classes").get<int>();
    const auto& task_meta = manifest.at("tasks");

    for (std::size_t i = 0; i < task_meta.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "task_%03zu.bin", i);
        const std::string path = (fs::path(dir) / name).string();
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open " + path);
        Task task;
        task.task_id = task_meta[i].at("task_id").get<int>();
        const int img_rows = task_meta[i].value("img_rows", 0);
        const int img_cols = task_meta[i].value("img_cols", 0);
        task.train = read_dataset(in, path, img_rows, img_cols);
        task.test = read_dataset(in, path, img_rows, img_cols);
        stream.tasks.push_back(std::move(task));
    }
    return stream;
}

}  // namespace topocl
