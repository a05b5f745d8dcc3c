#pragma once

#include "exitq/mdp.hpp"

#include <iosfwd>
#include <string>

namespace exitq
{
    // Flat text format. First line: cap,budget,gamma,tolerance. Then one row
    // per state in index order: index,w_low,w_high,h1..h_{window-1},action,value.
    // Numbers use the shortest round-trip representation, so identical
    // policies always serialize to identical bytes.
    void write_policy(std::ostream &out, const Policy &policy);
    std::string policy_to_string(const Policy &policy);

    // Throws InvalidInput on malformed or inconsistent content.
    Policy read_policy(std::istream &in);
    Policy load_policy(const std::string &path);
    void save_policy(const std::string &path, const Policy &policy);

    std::string format_double(double x);
} // namespace exitq
