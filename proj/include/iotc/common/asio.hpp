#pragma once

#include <boost/asio.hpp>

namespace iotc {

namespace asio = boost::asio;
using tcp = boost::asio::ip::tcp;
using boost::asio::awaitable;
using boost::asio::use_awaitable;
using error_code = boost::system::error_code;

using Clock = std::chrono::steady_clock;

}  // namespace iotc
