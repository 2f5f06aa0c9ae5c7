#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topocl/errors.hpp"

namespace topocl {

// Flat feature matrix with labels. rows/cols describe the image layout
// when the features are pixels (zero otherwise).
struct Dataset {
    int feature_dim = 0;
    int img_rows = 0;
    int img_cols = 0;
    std::vector<std::vector<float>> x;
    std::vector<int> y;

    int size() const { return static_cast<int>(x.size()); }
};

struct Task {
    int task_id = 0;
    Dataset train;
    Dataset test;
};

// Sequence of tasks sharing feature dimension and class count; training
// examples are disjoint across tasks and each appears once in the stream.
struct TaskStream {
    std::vector<Task> tasks;
    int feature_dim = 0;
    int num_classes = 0;
    std::string description;
};

// IDX container pair (images + labels), pixels normalized to [0, 1].
// Magic numbers 0x00000803 / 0x00000801, big-endian.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// 2x2 average pooling; rows and cols must be even.
Dataset downsample2x(const Dataset& base);

struct StreamParams {
    int num_tasks = 5;
    int train_per_task = 1000;
    int test_per_task = 500;
    std::uint64_t seed = 0;
};

// Task 1 is the untransformed base; later tasks apply one fixed seeded
// pixel permutation each. Training chunks are disjoint across tasks; every
// task reuses the same base test subset under its own permutation.
TaskStream make_permuted_tasks(const Dataset& train_base, const Dataset& test_base,
                               const StreamParams& params);

// Task 1 is unrotated; later tasks rotate by a fixed per-task angle, drawn
// uniformly from [0, 180) degrees, or evenly spaced over it when
// evenly_spaced is set. Bilinear interpolation about the image center,
// out-of-bounds pixels zero.
TaskStream make_rotated_tasks(const Dataset& train_base, const Dataset& test_base,
                              const StreamParams& params, bool evenly_spaced = false);

// Rotates one image; exposed for tests.
std::vector<float> rotate_image(const std::vector<float>& img, int rows, int cols,
                                double degrees);

struct SyntheticParams {
    int num_tasks = 5;
    int num_classes = 10;
    int feature_dim = 196;
    int train_per_task = 1000;
    int test_per_task = 500;
    double spread = 1.0;  // scale of class means
    double noise = 0.5;   // within-class standard deviation
    std::uint64_t seed = 0;
};

// Gaussian class blobs with a fixed seeded coordinate permutation per task
// (task 1 identity), mirroring the permuted-pixel structure without any
// files on disk.
TaskStream make_synthetic_tasks(const SyntheticParams& params);

// Directory cache for generated streams: manifest.json plus one binary
// file per task (little-endian float32 features, int32 labels).
void save_task_stream(const TaskStream& stream, const std::string& dir);
TaskStream load_task_stream(const std::string& dir);

}  // namespace topocl
