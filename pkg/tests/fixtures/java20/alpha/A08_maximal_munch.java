int x = a+++b;
boolean y = a<=b && c||d;
list.forEach(e -> e.run());
Map::get;
