#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace tcbubble {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidTree : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

class BandViolation : public Error {
public:
    using Error::Error;
};

class NotMartingale : public Error {
public:
    using Error::Error;
};

// No consistent price system on the requested scope. `certificate` holds the
// row multipliers that prove it (a Farkas ray when the closed polytope is
// empty, the optimal dual of the max-min-density program otherwise).
class NoCps : public Error {
public:
    NoCps(const std::string& what, std::vector<std::string> certificate = {})
        : Error(what), certificate(std::move(certificate)) {}
    std::vector<std::string> certificate;
};

class NoEmm : public Error {
public:
    using Error::Error;
};

class NumericalFailure : public Error {
public:
    using Error::Error;
};

class BadConfig : public Error {
public:
    using Error::Error;
};

class EmbeddingFailure : public Error {
public:
    using Error::Error;
};

class EmptySample : public Error {
public:
    using Error::Error;
};

}  // namespace tcbubble
