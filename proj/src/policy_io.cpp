#include "exitq/policy_io.hpp"

#include "exitq/errors.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>
#include <vector>

namespace exitq
{
    namespace
    {
        std::vector<std::string_view> split(std::string_view line)
        {
            std::vector<std::string_view> out;
            std::size_t start = 0;
            while (true)
            {
                const auto comma = line.find(',', start);
                out.push_back(line.substr(start, comma - start));
                if (comma == std::string_view::npos)
                {
                    return out;
                }
                start = comma + 1;
            }
        }

        template <class T>
        T parse_number(std::string_view text, std::size_t line)
        {
            T value{};
            const auto *end = text.data() + text.size();
            const auto [ptr, ec] = std::from_chars(text.data(), end, value);
            if (ec != std::errc() || ptr != end)
            {
                throw InvalidInput("policy file line " + std::to_string(line) + ": bad number '" +
                                   std::string(text) + "'");
            }
            return value;
        }
    } // namespace

    std::string format_double(double x)
    {
        char buf[64];
        const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
        return std::string(buf, ptr);
    }

    void write_policy(std::ostream &out, const Policy &policy)
    {
        const auto &space = policy.states();
        const auto &shape = space.shape();
        out << shape.cap << ',' << shape.budget << ',' << format_double(policy.discount()) << ','
            << format_double(policy.tolerance()) << '\n';
        for (std::size_t s = 0; s < space.size(); ++s)
        {
            const auto st = space.state(s);
            out << s << ',' << st.w_low << ',' << st.w_high;
            for (int h : st.history)
            {
                out << ',' << h;
            }
            out << ',' << policy.action(s) << ',' << format_double(policy.value(s)) << '\n';
        }
    }

    std::string policy_to_string(const Policy &policy)
    {
        std::ostringstream out;
        write_policy(out, policy);
        return out.str();
    }

    Policy read_policy(std::istream &in)
    {
        std::string line;
        if (!std::getline(in, line))
        {
            throw InvalidInput("policy file is empty");
        }
        const auto header = split(line);
        if (header.size() != 4)
        {
            throw InvalidInput("policy header must be cap,budget,gamma,tolerance");
        }
        const int cap = parse_number<int>(header[0], 1);
        const int budget = parse_number<int>(header[1], 1);
        const double gamma = parse_number<double>(header[2], 1);
        const double tolerance = parse_number<double>(header[3], 1);

        std::vector<std::string> lines;
        while (std::getline(in, line))
        {
            if (!line.empty())
            {
                lines.push_back(line);
            }
        }
        if (lines.empty())
        {
            throw InvalidInput("policy file has no state rows");
        }
        // index, w_low, w_high, history..., action, value
        const auto columns = split(lines.front()).size();
        if (columns < 5)
        {
            throw InvalidInput("policy rows need at least 5 columns");
        }
        const int window = static_cast<int>(columns) - 5 + 1;

        StateSpace space(cap, budget, window);
        if (lines.size() != space.size())
        {
            throw InvalidInput("policy file has " + std::to_string(lines.size()) + " rows, expected " +
                               std::to_string(space.size()));
        }
        std::vector<int> actions(space.size());
        std::vector<double> values(space.size());
        for (std::size_t s = 0; s < lines.size(); ++s)
        {
            const std::size_t lineno = s + 2;
            const auto cells = split(lines[s]);
            if (cells.size() != columns)
            {
                throw InvalidInput("policy file line " + std::to_string(lineno) + ": wrong column count");
            }
            if (parse_number<std::size_t>(cells[0], lineno) != s)
            {
                throw InvalidInput("policy file line " + std::to_string(lineno) + ": rows out of index order");
            }
            MdpState st;
            st.w_low = parse_number<int>(cells[1], lineno);
            st.w_high = parse_number<int>(cells[2], lineno);
            for (std::size_t c = 3; c + 2 < columns; ++c)
            {
                st.history.push_back(parse_number<int>(cells[c], lineno));
            }
            if (!(space.state(s) == st))
            {
                throw InvalidInput("policy file line " + std::to_string(lineno) + ": state does not match index");
            }
            actions[s] = parse_number<int>(cells[columns - 2], lineno);
            values[s] = parse_number<double>(cells[columns - 1], lineno);
        }
        return Policy(std::move(space), gamma, tolerance, std::move(actions), std::move(values));
    }

    Policy load_policy(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw InvalidInput("cannot open policy file " + path);
        }
        return read_policy(in);
    }

    void save_policy(const std::string &path, const Policy &policy)
    {
        std::ofstream out(path, std::ios::binary);
        if (!out)
        {
            throw InvalidInput("cannot write policy file " + path);
        }
        write_policy(out, policy);
    }
} // namespace exitq
