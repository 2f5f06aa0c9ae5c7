#pragma once

#include <stdexcept>

namespace topocl {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidGraph : Error { using Error::Error; };
struct DisconnectedGraph : Error { using Error::Error; };
struct CardinalityMismatch : Error { using Error::Error; };
struct NonPositiveWeight : Error { using Error::Error; };
struct TooLarge : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct InvalidLabel : Error { using Error::Error; };
struct InvalidSpec : Error { using Error::Error; };
struct InvalidEdgeId : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct BadMagic : Error { using Error::Error; };
struct CountMismatch : Error { using Error::Error; };
struct InsufficientData : Error { using Error::Error; };
struct IncompleteMatrix : Error { using Error::Error; };
struct UndefinedForSingleTask : Error { using Error::Error; };

}  // namespace topocl
