#pragma once

#include <stdexcept>
#include <string>

namespace exitq
{
    // Root of every error raised by the library. Callers that only need to
    // report a failure can catch this; the CLI maps subclasses to exit codes.
    class Error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    class InvalidInput : public Error
    {
    public:
        using Error::Error;
    };

    class InfeasibleProcessing : public Error
    {
    public:
        using Error::Error;
    };

    class UnknownRequest : public Error
    {
    public:
        using Error::Error;
    };

    class DuplicateRequest : public Error
    {
    public:
        using Error::Error;
    };

    class LengthMismatch : public Error
    {
    public:
        using Error::Error;
    };

    class InvalidAlpha : public Error
    {
    public:
        using Error::Error;
    };

    class IllegalAction : public Error
    {
    public:
        using Error::Error;
    };

    class NonConvergence : public Error
    {
    public:
        using Error::Error;
    };

    class ModelMismatch : public Error
    {
    public:
        using Error::Error;
    };

    class NoWithdrawals : public Error
    {
    public:
        using Error::Error;
    };

    class InstanceTooLarge : public Error
    {
    public:
        using Error::Error;
    };

    // A mechanism or solver broke a guarantee it is supposed to uphold.
    class InvariantViolation : public Error
    {
    public:
        using Error::Error;
    };
} // namespace exitq
